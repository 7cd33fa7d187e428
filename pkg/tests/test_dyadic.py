import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughfio.dyadic import (
    build_angular_family,
    build_lp_family,
    build_second_frequency_family,
    cutoff,
    cutoff_derivatives,
    smooth_step,
    smooth_step_derivatives,
)
from roughfio.grid import fibonacci_sphere, geodesic_distance


def _sphere_samples(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((n, 3))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


# -- profiles ---------------------------------------------------------------


def test_smooth_step_limits():
    y = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    s = smooth_step(y)
    assert s[0] == 0.0 and s[1] == 0.0
    assert s[2] == pytest.approx(0.5)
    assert s[3] == 1.0 and s[4] == 1.0


def test_cutoff_plateau_and_support():
    t = np.array([0.0, 0.9, 1.0, 1.5, 2.0, 3.0, -1.0, -2.5])
    c = cutoff(t)
    assert np.all(c[[0, 1, 2, 6]] == 1.0)
    assert 0 < c[3] < 1
    assert np.all(c[[4, 5, 7]] == 0.0)


def test_profile_derivatives_match_differences():
    y = np.linspace(0.05, 0.95, 17)
    h = 1e-6
    s0, s1, s2 = smooth_step_derivatives(y)
    assert np.allclose(s1, (smooth_step(y + h) - smooth_step(y - h)) / (2 * h), rtol=1e-6, atol=1e-8)
    d1 = smooth_step_derivatives(y + h)[1] - smooth_step_derivatives(y - h)[1]
    assert np.allclose(s2, d1 / (2 * h), rtol=1e-5, atol=1e-6)
    t = np.linspace(1.05, 1.95, 11)
    c0, c1, _ = cutoff_derivatives(t)
    assert np.allclose(c1, (cutoff(t + h) - cutoff(t - h)) / (2 * h), rtol=1e-6, atol=1e-8)


# -- first decomposition ----------------------------------------------------


def test_lp_partition_of_unity():
    fam = build_lp_family(6)
    lam = np.random.default_rng(0).uniform(0, fam.covered_range[1], 10_000)
    assert np.max(np.abs(fam.total(lam) - 1)) <= 1e-10


@pytest.mark.parametrize("j", [0, 2, 5])
def test_lp_piece_transition_and_support(j):
    fam = build_lp_family(6)
    assert 0 < fam.piece(j, 3 * 2.0 ** (j - 2)) < 1
    assert fam.piece(j, 2.0 ** (j + 2)) == 0.0


def test_lp_indices_and_bad_octave():
    fam = build_lp_family(3)
    assert fam.indices == [-1, 0, 1, 2, 3]
    with pytest.raises(KeyError):
        fam.piece(4, 1.0)


def test_lp_vanishes_outside_declared_support():
    fam = build_lp_family(5)
    for j in fam.indices:
        lo, hi = fam.support(j)
        lam = np.concatenate([np.linspace(hi, 4 * hi, 50), np.linspace(0, lo, 50) if lo > 0 else []])
        assert np.all(fam.piece(j, lam) == 0.0)


# -- angular patches --------------------------------------------------------


def test_angular_partition_at_every_node():
    fam = build_angular_family(2, 1.0)
    nodes = fibonacci_sphere(2000)
    assert np.max(np.abs(fam.evaluate(nodes).sum(axis=1) - 1)) <= 1e-10


@pytest.mark.parametrize("j,delta", [(0, 0.25), (2, 0.5), (4, 0.25), (6, 1.0)])
def test_patch_count_scaling(j, delta):
    fam = build_angular_family(j, delta)
    nominal = 2.0**j / delta**2
    assert nominal / 4 <= len(fam) <= 4 * nominal


@pytest.mark.parametrize("j", [0, 3])
def test_patch_derivative_bound(j):
    fam = build_angular_family(j, 0.5)
    w = _sphere_samples(400, j)
    worst = 0.0
    for nu in range(0, len(fam), max(1, len(fam) // 8)):
        g = fam.gradient(w, nu)
        worst = max(worst, np.max(np.linalg.norm(g, axis=1)))
    assert worst * fam.scale <= 10


def test_patch_support_is_exact():
    fam = build_angular_family(3, 0.5)
    w = _sphere_samples(3000, 1)
    for nu in (0, len(fam) // 2):
        outside = geodesic_distance(w, fam.centers[nu][None, :]) >= fam.radius
        assert np.all(fam.evaluate(w, nu)[outside] == 0.0)


def test_local_evaluation_matches_global():
    fam = build_angular_family(3, 0.5)
    w = _sphere_samples(500, 2)
    for nu in (1, 7):
        assert np.allclose(fam.evaluate_local(w, nu), fam.evaluate(w, nu), atol=1e-14)


def test_grid_too_coarse_for_patches():
    with pytest.raises(ValueError):
        build_angular_family(6, 0.25, angular_nodes=fibonacci_sphere(64))


def test_patches_times_band_recover_band():
    lp = build_lp_family(4)
    fam = build_angular_family(3, 0.5)
    lam = np.linspace(0.1, 20, 40)
    w = _sphere_samples(50, 3)
    eta = fam.evaluate(w)
    pieces = lp.piece(3, lam)[:, None, None] * eta[None, :, :]
    assert np.allclose(pieces.sum(axis=2), lp.piece(3, lam)[:, None], atol=1e-12)


# -- second decomposition ---------------------------------------------------


def test_second_family_single_bump():
    fam = build_second_frequency_family(3, 1 / 8, 1.0)
    assert fam.count == 1
    lam = np.linspace(*fam.interval, 100)
    assert np.all(fam.bump(0, lam) == 1.0)


def test_second_family_count_at_small_separation():
    fam = build_second_frequency_family(3, 1 / 8, 2.0**-8)
    assert fam.count == 2


@pytest.mark.parametrize("sep", [1.0, 2.0**-8, 2.0**-20, 1e-9])
def test_second_family_partition(sep):
    fam = build_second_frequency_family(4, 1 / 8, sep)
    lam = np.random.default_rng(4).uniform(*fam.interval, 10_000)
    assert np.max(np.abs(fam.total(lam) - 1)) <= 1e-10


def test_second_family_support_is_exact():
    fam = build_second_frequency_family(4, 1 / 8, 1e-9)
    lam = np.linspace(*fam.interval, 4001)
    for k in range(fam.count):
        a, b = fam.support(k)
        out = (lam < a) | (lam > b)
        assert np.all(fam.bump(k, lam)[out] == 0.0)


@pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(alpha=0.2), dict(separation=0.0), dict(separation=3.0)])
def test_second_family_rejects(kw):
    args = dict(j=2, alpha=1 / 8, separation=1.0)
    args.update(kw)
    with pytest.raises(ValueError):
        build_second_frequency_family(**args)


# -- properties -------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(j_max=st.integers(0, 8), lam=st.floats(0, 1.0, allow_nan=False))
def test_lp_sums_to_one_property(j_max, lam):
    fam = build_lp_family(j_max)
    x = lam * 2.0**j_max
    assert abs(float(fam.total(x)) - 1) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(j=st.integers(0, 5), delta=st.floats(0.2, 1.0), seed=st.integers(0, 1000))
def test_angular_sums_to_one_property(j, delta, seed):
    fam = build_angular_family(j, delta)
    w = _sphere_samples(64, seed)
    assert np.max(np.abs(fam.evaluate(w).sum(axis=1) - 1)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(j=st.integers(0, 6), alpha=st.floats(0.01, 0.19), sep=st.floats(1e-12, 2.0),
       t=st.floats(0, 1))
def test_second_family_sums_to_one_property(j, alpha, sep, t):
    fam = build_second_frequency_family(j, alpha, sep)
    lo, hi = fam.interval
    assert abs(float(fam.total(lo + t * (hi - lo))) - 1) <= 1e-10
