import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughfio.fio import (
    FioOperator,
    apply,
    apply_piece,
    baseline_constant,
    correlation,
    diagonal_norm,
    lower_bound_ratio,
    operator_norm,
    orthogonality_scan,
    piece_norm,
    random_density,
    spectrum,
    symbol,
)
from roughfio.grid import build_lattice_grid, build_polar_grid, polar_l2_norm, spatial_l2_norm
from roughfio.phase import flat_phase, perturbed_phase

PLANCHEREL = (2 * np.pi) ** 1.5


@pytest.fixture(scope="module")
def small():
    fg = build_polar_grid(-3, 1, 8, 256)
    sg = build_lattice_grid(2.5, 8)
    return fg, sg


@pytest.fixture(scope="module")
def density(small):
    fg, _ = small
    return random_density(fg, np.random.default_rng(11))


def _op(small, phase=None, kind="unit", **kw):
    fg, sg = small
    return FioOperator(phase or perturbed_phase(0.05), symbol(kind), fg, sg, **kw)


def _rel(a, b, sg):
    return spatial_l2_norm(a - b, sg) / spatial_l2_norm(b, sg)


# -- symbols ----------------------------------------------------------------


def test_symbol_kinds():
    assert symbol("unit").n_components == 1
    assert symbol("normal").n_components == 3
    assert symbol("gradient_and_lapse_inverse").n_components == 4
    assert symbol("zero").is_zero
    with pytest.raises(KeyError):
        symbol("nonsense")
    with pytest.raises(ValueError):
        symbol("custom")


# -- apply ------------------------------------------------------------------


def test_gaussian_fourier_identity():
    fg = build_polar_grid(-4, 1, 8, 512)
    sg = build_lattice_grid(3.0, 12)
    op = FioOperator(flat_phase(), symbol("unit"), fg, sg, check_patches=False)
    f = np.exp(-0.5 * fg.radial_nodes**2)[:, None] * np.ones(fg.shape)
    exact = PLANCHEREL * np.exp(-0.5 * np.sum(sg.points**2, axis=1))
    assert _rel(apply(op, f), exact, sg) <= 1e-3


def test_zero_density(small):
    op = _op(small)
    assert np.all(op.apply(np.zeros(op.shape)) == 0)


def test_fast_path_matches_direct_sum(small, density):
    op = _op(small)
    fast = op.apply(density)
    direct = op.with_(method="direct").apply(density)
    assert _rel(fast, direct, op.sgrid) <= 1e-8


def test_perturbed_apply_matches_refined_quadrature():
    # frozen oracle: the same densities on the grid with doubled radial and angular counts
    fg = build_polar_grid(-3, 1, 8, 1024)
    sg = build_lattice_grid(2.5, 10)
    ref = fg.refined()
    phase = perturbed_phase(0.05)
    f = random_density(fg, np.random.default_rng(5), j_max=1)
    fr = random_density(ref, np.random.default_rng(5), j_max=1)
    a = FioOperator(phase, symbol("unit"), fg, sg, check_patches=False).apply(f)
    b = FioOperator(phase, symbol("unit"), ref, sg, check_patches=False).apply(fr)
    assert _rel(a, b, sg) <= 0.01


def test_adjoint_identity(small, density):
    op = _op(small, kind="normal", check_patches=False)
    rng = np.random.default_rng(1)
    g = rng.standard_normal((len(op.sgrid), 3)) + 1j * rng.standard_normal((len(op.sgrid), 3))
    lhs = np.sum(np.conj(g) * op.apply(density) * op.sgrid.weights[:, None])
    rhs = np.sum(np.conj(op.adjoint(g)) * density * op.fgrid.measure)
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_with_symbol_dimension(small, density):
    op = _op(small, kind="gradient_and_lapse_inverse", check_patches=False)
    out = op.apply(density)
    assert out.shape == (len(op.sgrid), 4)
    grad = _op(small, kind="lapse_inverse_normal", check_patches=False).apply(density)
    lapse_inv = _op(small, kind="lapse_inverse", check_patches=False).apply(density)
    assert np.allclose(out[:, :3], grad, atol=1e-12 * np.abs(grad).max())
    assert np.allclose(out[:, 3], lapse_inv, atol=1e-12 * np.abs(lapse_inv).max())


# -- decomposition ----------------------------------------------------------


def test_sum_over_octaves(small, density):
    op = _op(small)
    whole = op.apply(density)
    total = sum(apply_piece(op, density, j) for j in op.lp.indices)
    assert _rel(total, whole, op.sgrid) <= 1e-8


def test_sum_over_patches(small, density):
    op = _op(small)
    j = 1
    part = apply_piece(op, density, j)
    total = sum(apply_piece(op, density, j, nu) for nu in range(len(op.angular_family(j))))
    assert _rel(total, part, op.sgrid) <= 1e-8


def test_sum_over_refined_split(small, density):
    op = _op(small)
    sep = 2.0**-16
    piece = apply_piece(op, density, 1, 3)
    count = op.second_family(1, sep).count
    assert count >= 2
    total = sum(apply_piece(op, density, 1, 3, k, separation=sep) for k in range(count))
    assert _rel(total, piece, op.sgrid) <= 1e-8


def test_bad_piece_indices(small, density):
    op = _op(small)
    with pytest.raises(KeyError):
        apply_piece(op, density, 9)
    with pytest.raises(KeyError):
        apply_piece(op, density, 0, 10_000)


# -- spectrum ---------------------------------------------------------------


def test_spectrum_of_single_octave(small):
    op = _op(small)
    lam = op.fgrid.radial_nodes
    f = np.where((lam > 0.6) & (lam < 0.9), 1.0, 0.0)[:, None] * np.ones(op.shape)
    sp = spectrum(op, f)
    assert 1 <= sum(g > 0 for g in sp.gamma_j.values()) <= 3


def test_spectrum_of_zero(small):
    op = _op(small)
    sp = spectrum(op, np.zeros(op.shape), separation=1.0)
    assert all(g == 0 for g in sp.gamma_j.values())
    assert sp.norm == 0


def test_spectrum_energy_identity(small, density):
    op = _op(small)
    sp = spectrum(op, density, separation=2.0**-16)
    assert sp.total_j() == pytest.approx(sp.norm, rel=1e-8)
    assert sp.total_j_nu() == pytest.approx(sp.norm, rel=1e-8)
    per_j = {}
    for (j, nu), g in sp.gamma_j_nu.items():
        per_j[j] = per_j.get(j, 0.0) + g**2
    for j, e in per_j.items():
        assert np.sqrt(e) == pytest.approx(sp.gamma_j[j], rel=1e-8)
    per_jnu = {}
    for (j, nu, k), g in sp.gamma_j_nu_k.items():
        per_jnu[(j, nu)] = per_jnu.get((j, nu), 0.0) + g**2
    for key, e in per_jnu.items():
        assert np.sqrt(e) == pytest.approx(sp.gamma_j_nu[key], rel=1e-8, abs=1e-14)


# -- correlations -----------------------------------------------------------


def test_self_correlation(small, density):
    op = _op(small)
    c = correlation(op, density, (1, 2), (1, 2))
    assert c.imag == 0
    assert c.real == pytest.approx(spatial_l2_norm(apply_piece(op, density, 1, 2), op.sgrid) ** 2, rel=1e-12)


@pytest.fixture(scope="module")
def flat_wide():
    fg = build_polar_grid(-2, 2, 8, 1024)
    sg = build_lattice_grid(5.0, 36)
    op = FioOperator(flat_phase(), symbol("unit"), fg, sg, check_patches=False)
    return op, random_density(fg, np.random.default_rng(0))


def test_flat_separated_octaves_are_orthogonal(flat_wide):
    op, f = flat_wide
    c = correlation(op, f, (-1,), (2,))
    assert abs(c) <= 1e-6 * piece_norm(op, f, -1) * piece_norm(op, f, 2)


def test_flat_frequency_scan_ratios(flat_wide):
    op, f = flat_wide
    tab = orthogonality_scan(op, f, "frequency", octaves=[-1, 0, 1, 2])
    assert tab.rows
    assert max(r["ratio"] for r in tab.rows) < 1e-4


def test_scan_rows_lie_below_fitted_envelope(small, density):
    op = _op(small)
    tab = orthogonality_scan(op, density, "angle", j=1, max_patches=16)
    assert tab.rows
    for r in tab.rows:
        assert r["measured"] <= tab.constant * r["envelope"] * (1 + 1e-12)


def test_scan_argument_checks(small, density):
    op = _op(small)
    with pytest.raises(ValueError):
        orthogonality_scan(op, density, "frequency", octaves=[0, 1])
    with pytest.raises(ValueError):
        orthogonality_scan(op, density, "angle")
    with pytest.raises(ValueError):
        orthogonality_scan(op, density, "diagonal")


# -- diagonal and norms -----------------------------------------------------


def test_flat_diagonal_ratio_bounded_by_plancherel(small, density):
    op = _op(small, flat_phase())
    worst = 0.0
    for j in op.octaves:
        for nu in range(len(op.angular_family(j))):
            res = diagonal_norm(op, density, j, nu)
            if not res.skipped:
                worst = max(worst, res.ratio)
    assert 0 < worst <= PLANCHEREL * (1 + 1e-3)


def test_diagonal_of_vanishing_patch(small, density):
    op = _op(small)
    f = density * (1 - op.patch_values(1)[:, 4])[None, :]
    f = f * (op.fgrid.radial_nodes[:, None] > 0)
    res = diagonal_norm(op, f * 0, 1, 4)
    assert res.norm == 0 and res.skipped


def test_flat_norm_matches_plancherel():
    fg = build_polar_grid(-3, 1, 8, 1024)
    sg = build_lattice_grid(3.0, 12)
    op = FioOperator(flat_phase(), symbol("unit"), fg, sg, check_patches=False)
    est = operator_norm(op, 1, 40, 0, tol=1e-5)
    assert est.value == pytest.approx(baseline_constant(fg, sg), rel=1e-9)
    assert est.value == pytest.approx(PLANCHEREL, rel=0.01)


def test_symbol_smallness_scales_linearly(small):
    vals = []
    for eps in (0.02, 0.01):
        op = _op(small, perturbed_phase(eps), "lapse_inverse_minus_one", check_patches=False)
        vals.append(operator_norm(op, 1, 40, 0, tol=1e-5).value)
    assert 1.6 <= vals[0] / vals[1] <= 2.4


def test_zero_symbol_norm_and_lower_bound(small):
    op = _op(small, kind="zero", check_patches=False)
    assert operator_norm(op).value == 0
    lb = lower_bound_ratio(op, 2, baseline=PLANCHEREL)
    assert lb.ratio == 0 and not lb.hypothesis_ok


def test_flat_lower_bound_is_one():
    # the images must fit in the box for the isometry to show
    fg = build_polar_grid(-3, 1, 8, 1024)
    sg = build_lattice_grid(4.5, 18)
    op = FioOperator(flat_phase(), symbol("unit"), fg, sg, check_patches=False)
    lb = lower_bound_ratio(op, 4, seed=2, baseline=PLANCHEREL)
    assert lb.ratio == pytest.approx(1.0, abs=0.01)


def test_perturbed_lower_bound(small):
    op = _op(small, perturbed_phase(0.01), check_patches=False)
    lb = lower_bound_ratio(op, 6, seed=3)
    assert lb.ratio >= 0.5 and lb.hypothesis_ok


def test_norm_argument_checks(small):
    op = _op(small)
    with pytest.raises(ValueError):
        operator_norm(op, ensemble_size=0)
    with pytest.raises(ValueError):
        operator_norm(op, power_iters=2)


# -- properties -------------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(a=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       b=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       seed=st.integers(0, 2**31))
def test_apply_is_linear(small, a, b, seed):
    op = _op(small, check_patches=False)
    rng = np.random.default_rng(seed)
    f = random_density(op.fgrid, rng)
    g = random_density(op.fgrid, rng)
    lhs = op.apply(a * f + b * g)
    rhs = a * op.apply(f) + b * op.apply(g)
    scale = (abs(a) + abs(b)) * max(np.abs(op.apply(f)).max(), np.abs(op.apply(g)).max())
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(scale, 1e-300) + 1e-300


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31), j=st.integers(-1, 1))
def test_decomposition_property(small, seed, j):
    op = _op(small)
    f = random_density(op.fgrid, np.random.default_rng(seed))
    part = apply_piece(op, f, j)
    total = sum(apply_piece(op, f, j, nu) for nu in range(len(op.angular_family(j))))
    assert spatial_l2_norm(total - part, op.sgrid) <= 1e-8 * max(spatial_l2_norm(part, op.sgrid), 1e-300)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_spectrum_pythagoras_property(small, seed):
    op = _op(small)
    f = random_density(op.fgrid, np.random.default_rng(seed))
    sp = spectrum(op, f)
    assert sp.total_j() == pytest.approx(polar_l2_norm(f, op.fgrid), rel=1e-8)
    assert sp.total_j_nu() == pytest.approx(sp.norm, rel=1e-8)
