import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughfio.grid import build_lattice_grid, build_polar_grid, tangent_frame
from roughfio.phase import (
    DegenerateJacobianWarning,
    TrigPolynomial,
    change_of_variable,
    check_assumptions,
    flat_phase,
    inverse_change_of_variable,
    jet,
    normal_derivatives,
    perturbed_phase,
)


def _points(n, radius, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 3))
    return x * (radius * rng.uniform(size=(n, 1)) ** (1 / 3)) / np.linalg.norm(x, axis=1, keepdims=True)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


OMEGA = _unit([0.3, -0.5, 0.8])


# -- jet --------------------------------------------------------------------


def test_flat_jet():
    x = _points(50, 3.0, 0)
    jt = jet(flat_phase(), x, OMEGA)
    assert np.allclose(jt.a, 1.0)
    assert np.allclose(jt.N, OMEGA)
    assert np.allclose(jt.theta, 0.0)
    assert np.allclose(jt.u, x @ OMEGA)


def test_perturbation_vanishes_far_out():
    x = _points(200, 4.0, 1)
    x = x[np.linalg.norm(x, axis=1) >= 2.0]
    p, f = jet(perturbed_phase(0.05), x, OMEGA), jet(flat_phase(), x, OMEGA)
    for name in ("u", "a", "N", "theta", "domega_u", "domega2_u"):
        assert np.allclose(getattr(p, name), getattr(f, name), atol=1e-15), name


def test_theta_matches_differences_of_normal():
    phase = perturbed_phase(0.05)
    x = _points(40, 1.8, 2)
    jt = jet(phase, x, OMEGA)
    h = 1e-5
    E = jt.frame
    for n in range(len(x)):
        e = E[n]
        fd = np.empty((2, 2))
        for b in range(2):
            dN = (phase.normal(x[n] + h * e[:, b], OMEGA) - phase.normal(x[n] - h * e[:, b], OMEGA)) / (2 * h)
            for a_ in range(2):
                fd[a_, b] = e[:, a_] @ dN
        assert np.max(np.abs(fd - jt.theta[n])) < 1e-4


def test_normal_derivatives_match_differences():
    phase = perturbed_phase(0.05)
    x = _points(20, 1.5, 3)
    grad_a, grad_N = normal_derivatives(phase, x, OMEGA)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        da = (phase.lapse(x + e, OMEGA) - phase.lapse(x - e, OMEGA)) / (2 * h)
        dN = (phase.normal(x + e, OMEGA) - phase.normal(x - e, OMEGA)) / (2 * h)
        assert np.allclose(grad_a[:, i], da, atol=1e-8)
        assert np.allclose(grad_N[:, i, :], dN, atol=1e-8)


def test_omega_gradient_matches_differences():
    phase = perturbed_phase(0.05)
    x = _points(30, 1.8, 4)
    jt = jet(phase, x, OMEGA)
    e1, e2 = (v[0] for v in tangent_frame(OMEGA[None, :]))
    h = 1e-4
    for e in (e1, e2):
        wp = _unit(OMEGA + h * e)
        wm = _unit(OMEGA - h * e)
        fd = (phase.value(x, wp) - phase.value(x, wm)) / (np.linalg.norm(wp - wm))
        an = jt.domega_u @ e
        assert np.max(np.abs(fd - an)) <= 1e-6 * max(1.0, np.max(np.abs(an)))


def test_degenerate_gradient_raises():
    from roughfio.phase import DegenerateGradientError

    # u = s + cos(2 s) near the origin, whose s-derivative 1 - 2 sin(2 s) vanishes at s = pi/12
    poly = TrigPolynomial.from_lists([1.0], [2.0], [[0, 0, 0]])
    phase = perturbed_phase(1.0, poly=poly)
    with pytest.raises(DegenerateGradientError):
        jet(phase, np.pi / 12 * OMEGA[None, :], OMEGA)


# -- change of variable -----------------------------------------------------


def test_flat_change_of_variable_is_identity():
    x = _points(100, 3.0, 5)
    y, det = change_of_variable(flat_phase(), OMEGA, x)
    assert np.array_equal(y, x) or np.allclose(y, x, atol=1e-15, rtol=0)
    assert np.allclose(det, 1.0)


def test_change_of_variable_far_out():
    x = _points(300, 4.0, 6)
    x = x[np.linalg.norm(x, axis=1) >= 2.0]
    y, det = change_of_variable(perturbed_phase(0.05), OMEGA, x)
    assert np.allclose(y, x, atol=1e-14)
    assert np.allclose(det, 1.0)


def test_jacobian_deviation_is_order_epsilon():
    eps = 0.05
    x = _points(4000, 2.0, 7)
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(8):
        om = _unit(rng.standard_normal(3))
        _, det = change_of_variable(perturbed_phase(eps), om, x)
        worst = max(worst, np.max(np.abs(det - 1)))
    assert 0 < worst / eps < 20


def test_inverse_change_of_variable():
    phase = perturbed_phase(0.05)
    x = _points(50, 2.5, 9)
    y, _ = change_of_variable(phase, OMEGA, x)
    assert np.allclose(inverse_change_of_variable(phase, OMEGA, y), x, atol=1e-10)


def test_degenerate_jacobian_warns():
    with pytest.warns(DegenerateJacobianWarning):
        change_of_variable(perturbed_phase(3.0), OMEGA, _points(2000, 1.5, 10))


# -- assumption checker -----------------------------------------------------


@pytest.fixture(scope="module")
def check_grids():
    return build_polar_grid(0, 1, 4, 64), build_lattice_grid(2.5, 10)


def test_flat_phase_passes_all_assumptions(check_grids):
    fg, sg = check_grids
    rep = check_assumptions(flat_phase(), fg, sg)
    assert rep.passed
    for name, val in rep.eps_bounded().items():
        assert val <= 1e-8, name


def test_measurements_scale_linearly_in_epsilon(check_grids):
    fg, sg = check_grids
    full = check_assumptions(perturbed_phase(0.02), fg, sg).eps_bounded()
    half = check_assumptions(perturbed_phase(0.01), fg, sg).eps_bounded()
    for name, v in full.items():
        if v < 1e-6:
            continue
        assert half[name] / v == pytest.approx(0.5, rel=0.2), name


def test_perturbed_phase_passes_at_small_epsilon(check_grids):
    fg, sg = check_grids
    rep = check_assumptions(perturbed_phase(0.05), fg, sg)
    assert rep.passed, [e.name for e in rep.entries if not e.passed]


def test_folded_phase_fails_jacobian_assumption(check_grids):
    fg, sg = check_grids
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = check_assumptions(perturbed_phase(3.0), fg, sg)
    entries = rep.by_name()
    assert not entries["jacobian_degeneracy"].passed
    assert not rep.passed


def test_report_rows(check_grids):
    fg, sg = check_grids
    rows = check_assumptions(flat_phase(), fg, sg).to_rows()
    assert {r["assumption"] for r in rows} == {1, 2, 3, 4, 5, 6}
    assert all({"name", "value", "bound", "passed"} <= set(r) for r in rows)


# -- properties -------------------------------------------------------------

unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1).map(_unit)
points = st.tuples(*[st.floats(-2.5, 2.5)] * 3).map(np.array)


@settings(max_examples=60, deadline=None)
@given(x=points, om=unit_vectors, eps=st.floats(0, 0.1))
def test_normal_alignment_and_symmetric_theta(x, om, eps):
    phase = perturbed_phase(eps) if eps > 0 else flat_phase()
    jt = jet(phase, x[None, :], om)
    g = jt.grad_u[0]
    assert abs(jt.N[0] @ g - np.linalg.norm(g)) <= 1e-12 * max(1.0, np.linalg.norm(g))
    assert np.max(np.abs(jt.theta[0] - jt.theta[0].T)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(x=points, om=unit_vectors)
def test_flat_change_of_variable_identity_property(x, om):
    y, det = change_of_variable(flat_phase(), om, x[None, :])
    assert np.allclose(y[0], x, atol=1e-14)
    assert det[0] == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(x=points, om=unit_vectors)
def test_omega_gradient_property(x, om):
    phase = perturbed_phase(0.05)
    jt = jet(phase, x[None, :], om)
    e1, e2 = (v[0] for v in tangent_frame(om[None, :]))
    h = 1e-4
    for e in (e1, e2):
        wp, wm = _unit(om + h * e), _unit(om - h * e)
        fd = (phase.value(x[None, :], wp) - phase.value(x[None, :], wm))[0] / np.linalg.norm(wp - wm)
        an = float(jt.domega_u[0] @ e)
        assert abs(fd - an) <= 1e-6 * max(1.0, abs(an))
