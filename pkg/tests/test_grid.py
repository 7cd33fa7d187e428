import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughfio.grid import (
    build_ball_grid,
    build_lattice_grid,
    build_polar_grid,
    fibonacci_sphere,
    grid_spec,
    load_array,
    mixed_norm,
    polar_l2_norm,
    save_array,
    spatial_l2_norm,
    spectral_gradient,
)
from roughfio.phase import flat_phase


# -- polar grid -------------------------------------------------------------


def test_polar_grid_construction():
    g = build_polar_grid(0, 3, 8, 64)
    assert g.shape == (32, 64)
    assert g.radial_nodes[0] == pytest.approx(0.5)
    assert g.radial_nodes[-1] == pytest.approx(16.0)
    assert np.all(np.diff(g.radial_nodes) > 0)


def test_angular_weights_sum_to_sphere_area():
    g = build_polar_grid(0, 1, 4, 300)
    assert abs(g.angular_weights.sum() - 4 * np.pi) < 1e-10


def test_second_moment_on_sphere():
    g = build_polar_grid(0, 1, 4, 2048)
    val = np.sum(g.angular_nodes[:, 2] ** 2 * g.angular_weights)
    assert abs(val - 4 * np.pi / 3) < 1e-3


def test_fibonacci_nodes_are_unit():
    w = fibonacci_sphere(97)
    assert np.allclose(np.linalg.norm(w, axis=1), 1.0)


@pytest.mark.parametrize("args", [(2, 1, 8, 64), (0, 1, 0, 64), (0, 1, 8, 0), (0, 1, 2, 64)])
def test_polar_grid_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        build_polar_grid(*args)


def test_polar_norm_of_zero():
    g = build_polar_grid(0, 1, 4, 64)
    assert polar_l2_norm(np.zeros(g.shape), g) == 0.0


def test_polar_norm_of_constant_on_shell():
    # nodes span [1/2, 2]; int_{1/2}^{2} lam^2 dlam = 63/24
    g = build_polar_grid(0, 0, 64, 64)
    val = polar_l2_norm(np.ones(g.shape), g)
    assert val == pytest.approx(np.sqrt(4 * np.pi * 63 / 24), rel=1e-3)


def test_polar_norm_of_gaussian_matches_refined_grid():
    # frozen against the same rule at 8x the radial and angular counts
    g = build_polar_grid(-6, 3, 16, 128)
    f = np.exp(-0.5 * g.radial_nodes**2)[:, None] * np.ones(g.shape)
    ref = build_polar_grid(-6, 3, 128, 1024)
    fr = np.exp(-0.5 * ref.radial_nodes**2)[:, None] * np.ones(ref.shape)
    assert abs(polar_l2_norm(f, g) - polar_l2_norm(fr, ref)) < 1e-4
    # analytic value: int_0^inf e^{-lam^2} lam^2 dlam = sqrt(pi) / 4
    assert polar_l2_norm(fr, ref) == pytest.approx(np.sqrt(np.pi**1.5), rel=1e-4)


def test_polar_norm_shape_mismatch():
    g = build_polar_grid(0, 1, 4, 64)
    with pytest.raises(ValueError):
        polar_l2_norm(np.zeros((3, 3)), g)


def test_refined_grid_changes_norm_by_less_than_one_percent():
    g = build_polar_grid(-3, 2, 8, 256)
    h = g.refined()
    assert h.shape == (2 * g.shape[0], 2 * g.shape[1])

    def dens(grid):
        xi = grid.points()
        return np.exp(-0.3 * np.sum((xi - [0.5, -0.2, 0.3]) ** 2, axis=-1))

    a, b = polar_l2_norm(dens(g), g), polar_l2_norm(dens(h), h)
    assert abs(a - b) < 0.01 * b


# -- spatial grids ----------------------------------------------------------


def test_spatial_norm_of_zero():
    s = build_lattice_grid(2.0, 8)
    assert spatial_l2_norm(np.zeros(len(s)), s) == 0.0


def test_ball_volume():
    R = 1.7
    s = build_ball_grid(R, 24, 256)
    assert spatial_l2_norm(np.ones(len(s)), s) == pytest.approx(np.sqrt(4 * np.pi * R**3 / 3), abs=1e-3)


def test_spatial_norm_matches_direct_sum():
    s = build_lattice_grid(1.5, 6)
    rng = np.random.default_rng(3)
    F = rng.standard_normal((len(s), 3)) + 1j * rng.standard_normal((len(s), 3))
    direct = np.sqrt(sum(s.weights[i] * np.sum(np.abs(F[i]) ** 2) for i in range(len(s))))
    assert spatial_l2_norm(F, s) == pytest.approx(direct, rel=1e-13)


def test_lattice_geometry():
    s = build_lattice_grid(2.0, 8)
    assert s.is_lattice
    assert s.spacing == pytest.approx(0.5)
    assert s.weights.sum() == pytest.approx(64.0)


def test_spectral_gradient_of_gaussian():
    s = build_lattice_grid(5.0, 32)
    x = s.points
    g = np.exp(-np.sum(x**2, axis=1))
    exact = -2 * x * g[:, None]
    num = spectral_gradient(g, s)
    assert np.isrealobj(num)
    assert spatial_l2_norm(num - exact, s) < 1e-6 * spatial_l2_norm(exact, s)


# -- mixed norms ------------------------------------------------------------


def test_mixed_norm_sup_of_constant_on_ball():
    R = 2.0
    s = build_ball_grid(R, 40, 800)
    val = mixed_norm(np.ones(len(s)), flat_phase(), [0, 0, 1.0], np.inf, 2, slab_width=0.1, grid=s)
    assert val == pytest.approx(R * np.sqrt(np.pi), rel=0.05)


def test_mixed_norm_two_two_is_l2():
    s = build_lattice_grid(3.0, 24)
    x = s.points
    F = np.exp(-np.sum(x**2, axis=1))
    val = mixed_norm(F, flat_phase(), [0, 0, 1.0], 2, 2, grid=s)
    assert val == pytest.approx(spatial_l2_norm(F, s), rel=0.02)


def test_mixed_norm_single_slab():
    s = build_lattice_grid(2.0, 8)
    x = s.points
    D = 0.5
    F = np.where((x[:, 2] >= 0) & (x[:, 2] < D), 1.0, 0.0)
    sup = mixed_norm(F, flat_phase(), [0, 0, 1.0], np.inf, 2, slab_width=D, grid=s)
    slab = np.sqrt(np.sum(F**2 * s.weights) / D)
    assert sup == pytest.approx(slab, rel=1e-12)


def test_mixed_norm_slab_error_shrinks():
    s = build_lattice_grid(3.0, 48)
    x = s.points
    F = np.exp(-np.sum(x**2, axis=1))
    ref = spatial_l2_norm(F, s)
    errs = [abs(mixed_norm(F, flat_phase(), [0.6, 0, 0.8], 2, 2, slab_width=D, grid=s) - ref)
            for D in (0.5, 0.25)]
    assert errs[1] <= errs[0] + 1e-12


def test_mixed_norm_rejects_exponent():
    s = build_lattice_grid(2.0, 4)
    with pytest.raises(ValueError):
        mixed_norm(np.ones(len(s)), flat_phase(), [0, 0, 1.0], 3, 2, grid=s)


# -- serialization ----------------------------------------------------------


def test_save_and_load_roundtrip(tmp_path):
    g = build_polar_grid(0, 1, 4, 32)
    s = build_lattice_grid(1.0, 4)
    spec = grid_spec(g, s)
    arr = np.arange(g.shape[0] * g.shape[1], dtype=float).reshape(g.shape)
    path = tmp_path / "f.npz"
    save_array(path, arr, spec)
    back, meta = load_array(path, spec)
    assert np.array_equal(back, arr)
    assert meta["grid"]["angular_count"] == 32


# -- properties -------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(c=st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       seed=st.integers(0, 2**32 - 1))
def test_norms_are_homogeneous(c, seed):
    rng = np.random.default_rng(seed)
    g = build_polar_grid(-1, 1, 4, 32)
    s = build_lattice_grid(1.0, 4)
    f = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    F = rng.standard_normal(len(s))
    assert polar_l2_norm(c * f, g) == pytest.approx(abs(c) * polar_l2_norm(f, g), rel=1e-12)
    assert spatial_l2_norm(c * F, s) == pytest.approx(abs(c) * spatial_l2_norm(F, s), rel=1e-12)
    m1 = mixed_norm(c * F, flat_phase(), [0, 0, 1.0], 2, np.inf, grid=s)
    m0 = mixed_norm(F, flat_phase(), [0, 0, 1.0], 2, np.inf, grid=s)
    assert m1 == pytest.approx(abs(c) * m0, rel=1e-12)
