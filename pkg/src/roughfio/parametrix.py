"""Half-wave operators, the initial-data system and its solution.

With ``u_+(x, w) = u(x, w)`` and ``u_-(x, w) = -u(x, -w)`` the half-wave
operators are Fourier integral operators with phase ``+-u(x, +-w)``:

    M_+-  symbol 1,
    Q_+-  symbol a(x, +-w)^-1,
    P_+-  symbol N(x, +-w),
    grad M_+- f = +-i (a^-1 N)(x, +-w) applied to lam f.

The unknowns are stored as ``g_+- = lam f_+-``.  In these variables the
data equations read

    A_+ g_+ - A_- g_- = -i grad phi0,      Q_+ g_+ - Q_- g_- = i phi1,

with ``A_+-`` the operator of symbol ``(a^-1 N)(x, +-w)``, and the block
operator ``Lambda`` stacks both rows into one field with four components.
For the flat phase the solution is

    g_+- = (lam F phi0 +- i F phi1) / 2,   F phi(xi) = (2 pi)^-3 int e^{-i x.xi} phi(x) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft

from .fio import FioOperator, symbol
from .grid import (
    PolarFrequencyGrid,
    SpatialGrid,
    polar_l2_norm,
    spatial_l2_norm,
    spectral_gradient,
)
from .phase import PhaseField, flat_phase

__all__ = [
    "InitialData",
    "initial_data",
    "gaussian_data",
    "random_data",
    "HalfDensityPair",
    "halfwave_operator",
    "apply_halfwave",
    "OperatorSystem",
    "assemble_system",
    "SolveResult",
    "solve_data",
    "fourier_transform",
    "flat_closed_form",
    "estimate_ratio",
    "flat_estimate_ratio",
    "evolve_flat",
    "spectral_evolution",
]


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class InitialData:
    """Wave data ``(phi0, phi1)`` sampled on a spatial grid."""

    phi0: np.ndarray
    phi1: np.ndarray
    grad_phi0: np.ndarray
    sgrid: SpatialGrid

    def scaled(self, c: complex) -> "InitialData":
        return InitialData(c * self.phi0, c * self.phi1, c * self.grad_phi0, self.sgrid)

    @property
    def norm(self) -> float:
        """``||grad phi0|| + ||phi1||``."""
        return spatial_l2_norm(self.grad_phi0, self.sgrid) + spatial_l2_norm(self.phi1, self.sgrid)


def initial_data(sgrid: SpatialGrid, phi0, phi1, grad_phi0=None) -> InitialData:
    """Bundle data; the gradient is computed spectrally when not supplied."""
    phi0 = np.asarray(phi0)
    phi1 = np.asarray(phi1)
    if phi0.shape != (len(sgrid),) or phi1.shape != (len(sgrid),):
        raise ValueError("data must be sampled at every grid point")
    if grad_phi0 is None:
        if not sgrid.is_lattice:
            raise ValueError("a spectral gradient needs a lattice grid")
        grad_phi0 = spectral_gradient(phi0, sgrid)
    grad_phi0 = np.asarray(grad_phi0)
    if grad_phi0.shape != (len(sgrid), 3):
        raise ValueError("gradient must have shape (n_points, 3)")
    return InitialData(phi0, phi1, grad_phi0, sgrid)


def gaussian_data(sgrid: SpatialGrid, which: str = "phi0", width: float = 1.0) -> InitialData:
    """``exp(-|x|^2 / (2 width^2))`` in one slot and zero in the other, exact gradient."""
    x = sgrid.points
    g = np.exp(-0.5 * np.sum(x**2, axis=1) / width**2)
    zero = np.zeros_like(g)
    if which == "phi0":
        return initial_data(sgrid, g, zero, -x / width**2 * g[:, None])
    if which == "phi1":
        return initial_data(sgrid, zero, g, np.zeros_like(x))
    raise ValueError("which must be 'phi0' or 'phi1'")


def random_data(sgrid: SpatialGrid, rng, n_bumps: int = 3, width: float = 1.2,
                spread: float = 0.5) -> InitialData:
    """Seeded smooth data: sums of Gaussians with complex amplitudes.

    Each slot holds ``n_bumps`` Gaussians of the given width centered in the
    ball of radius ``spread``; the gradient of ``phi0`` is exact.  With
    ``width = 1.2`` the spectra are below ``1e-5`` of their peak beyond
    ``|xi| = 4``.
    """
    x = sgrid.points
    fields = []
    for _ in range(2):
        val = np.zeros(len(sgrid), dtype=np.complex128)
        grad = np.zeros((len(sgrid), 3), dtype=np.complex128)
        for _ in range(n_bumps):
            c = rng.standard_normal(3)
            c *= spread * rng.uniform() ** (1 / 3) / np.linalg.norm(c)
            amp = rng.standard_normal() + 1j * rng.standard_normal()
            d = x - c
            g = amp * np.exp(-0.5 * np.sum(d**2, axis=1) / width**2)
            val += g
            grad -= d / width**2 * g[:, None]
        fields.append((val, grad))
    return initial_data(sgrid, fields[0][0], fields[1][0], fields[0][1])


# ---------------------------------------------------------------------------
# half-wave operators
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class HalfDensityPair:
    """``g_+- = lam f_+-`` on a polar grid."""

    g_plus: np.ndarray
    g_minus: np.ndarray
    fgrid: PolarFrequencyGrid

    @property
    def f_plus(self) -> np.ndarray:
        return self.g_plus / self.fgrid.radial_nodes[:, None]

    @property
    def f_minus(self) -> np.ndarray:
        return self.g_minus / self.fgrid.radial_nodes[:, None]

    def norms(self) -> tuple[float, float]:
        """``(||lam f_+||, ||lam f_-||)``."""
        return polar_l2_norm(self.g_plus, self.fgrid), polar_l2_norm(self.g_minus, self.fgrid)


_HALFWAVE_SYMBOLS = {
    "M": "unit",
    "Q": "lapse_inverse",
    "P": "normal",
    "gradM": "lapse_inverse_normal",
    "A": "lapse_inverse_normal",
}


def _sign(sign) -> int:
    if sign in ("+", 1, +1):
        return 1
    if sign in ("-", -1):
        return -1
    raise ValueError("sign must be '+' or '-'")


def halfwave_operator(kind: str, sign, phase: PhaseField, fgrid: PolarFrequencyGrid,
                      sgrid: SpatialGrid, **op_kw) -> FioOperator:
    """The operator with phase ``s u(x, s w)`` and the symbol of ``kind`` at ``(x, s w)``.

    ``kind = "gradM"`` returns the operator of symbol ``a^-1 N``; the factor
    ``+-i lam`` is applied by :func:`apply_halfwave`.
    """
    if kind not in _HALFWAVE_SYMBOLS:
        raise KeyError(f"unknown half-wave operator {kind!r}")
    s = _sign(sign)
    op_kw.setdefault("check_patches", False)
    return FioOperator(phase, symbol(_HALFWAVE_SYMBOLS[kind]), fgrid, sgrid,
                       phase_sign=s, omega_sign=s, **op_kw)


def apply_halfwave(kind: str, sign, phase: PhaseField, f, fgrid: PolarFrequencyGrid,
                   sgrid: SpatialGrid, **op_kw) -> np.ndarray:
    """Apply ``M``, ``Q``, ``P`` or ``grad M`` with sign ``+`` or ``-`` to the density ``f``."""
    op = halfwave_operator(kind, sign, phase, fgrid, sgrid, **op_kw)
    f = np.asarray(f)
    if kind == "gradM":
        return _sign(sign) * 1j * op.apply(fgrid.radial_nodes[:, None] * f)
    return op.apply(f)


# ---------------------------------------------------------------------------
# block system
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class OperatorSystem:
    """``Lambda(g_+, g_-) = (A_+ g_+ - A_- g_-, Q_+ g_+ - Q_- g_-)`` and its adjoint.

    Both rows come from one operator with the four-component symbol
    ``(grad u, |grad u|) = (a^-1 N, a^-1)`` per sign.
    """

    phase: PhaseField
    fgrid: PolarFrequencyGrid
    sgrid: SpatialGrid
    mu: float
    plus: FioOperator = field(repr=False)
    minus: FioOperator = field(repr=False)

    def apply(self, g_plus, g_minus) -> np.ndarray:
        """Field with four components: the ``A`` row then the ``Q`` row."""
        return self.plus.apply(g_plus) - self.minus.apply(g_minus)

    def adjoint(self, r) -> tuple[np.ndarray, np.ndarray]:
        r = np.asarray(r, dtype=np.complex128)
        return self.plus.adjoint(r), -self.minus.adjoint(r)

    def target(self, data: InitialData) -> np.ndarray:
        """``(-i grad phi0, i phi1)``."""
        return np.column_stack([-1j * data.grad_phi0, 1j * data.phi1])

    def residual_norm(self, pair: HalfDensityPair, data: InitialData) -> float:
        """Relative data misfit ``||Lambda g - target|| / ||target||``."""
        b = self.target(data)
        nb = spatial_l2_norm(b, self.sgrid)
        r = self.apply(pair.g_plus, pair.g_minus) - b
        return spatial_l2_norm(r, self.sgrid) / nb if nb > 0 else 0.0


def assemble_system(phase: PhaseField, fgrid: PolarFrequencyGrid, sgrid: SpatialGrid,
                    mu: float | None = None, **op_kw) -> OperatorSystem:
    """Build ``Lambda``.

    ``mu`` defaults to ``1e-8`` times the squared Plancherel constant
    ``(2 pi)^{3/2}``, which the discrete flat norm reproduces on adequate grids.
    """
    if mu is None:
        mu = 1e-8 * (2 * np.pi) ** 3
    if mu < 0:
        raise ValueError("mu must be non-negative")
    op_kw.setdefault("check_patches", False)
    plus = FioOperator(phase, symbol("gradient_and_lapse_inverse"), fgrid, sgrid, **op_kw)
    minus = plus.with_(phase_sign=-1, omega_sign=-1)
    return OperatorSystem(phase, fgrid, sgrid, float(mu), plus, minus)


@dataclass
class SolveResult:
    pair: HalfDensityPair
    residual: float
    iterations: int
    converged: bool
    misfit: float
    history: list


def _pinner(a, b, fgrid) -> complex:
    return complex(np.sum(np.conj(a) * b * fgrid.measure))


def solve_data(system: OperatorSystem, data: InitialData, tol: float = 1e-6,
               max_iter: int = 200, initial: HalfDensityPair | None = None) -> SolveResult:
    """Conjugate gradients on ``(Lambda^* Lambda + mu) g = Lambda^* b``.

    ``residual`` is the relative residual of these normal equations; the
    relative data misfit is reported separately.  Non-convergence within
    ``max_iter`` iterations is flagged, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    fg = system.fgrid
    b = system.target(data)
    bp, bm = system.adjoint(b)
    nrm_b = math.sqrt(max(_pinner(bp, bp, fg).real + _pinner(bm, bm, fg).real, 0.0))
    if initial is None:
        xp = np.zeros(fg.shape, dtype=np.complex128)
        xm = np.zeros(fg.shape, dtype=np.complex128)
    else:
        xp = np.array(initial.g_plus, dtype=np.complex128)
        xm = np.array(initial.g_minus, dtype=np.complex128)

    def normal(p, m):
        ap, am = system.adjoint(system.apply(p, m))
        return ap + system.mu * p, am + system.mu * m

    if nrm_b == 0:
        pair = HalfDensityPair(np.zeros_like(xp), np.zeros_like(xm), fg)
        return SolveResult(pair, 0.0, 0, True, 0.0, [0.0])
    ap, am = normal(xp, xm) if initial is not None else (0 * xp, 0 * xm)
    rp, rm = bp - ap, bm - am
    pp, pm = rp.copy(), rm.copy()
    rr = _pinner(rp, rp, fg).real + _pinner(rm, rm, fg).real
    history = [math.sqrt(rr) / nrm_b]
    it = 0
    while history[-1] > tol and it < max_iter:
        it += 1
        qp, qm = normal(pp, pm)
        alpha = rr / (_pinner(pp, qp, fg).real + _pinner(pm, qm, fg).real)
        xp += alpha * pp
        xm += alpha * pm
        rp -= alpha * qp
        rm -= alpha * qm
        rr_new = _pinner(rp, rp, fg).real + _pinner(rm, rm, fg).real
        pp = rp + (rr_new / rr) * pp
        pm = rm + (rr_new / rr) * pm
        rr = rr_new
        history.append(math.sqrt(rr) / nrm_b)
    pair = HalfDensityPair(xp, xm, fg)
    return SolveResult(
        pair=pair,
        residual=history[-1],
        iterations=it,
        converged=history[-1] <= tol,
        misfit=system.residual_norm(pair, data),
        history=history,
    )


# ---------------------------------------------------------------------------
# flat case
# ---------------------------------------------------------------------------


def fourier_transform(values, fgrid: PolarFrequencyGrid, sgrid: SpatialGrid) -> np.ndarray:
    """``(2 pi)^-3 sum_x w(x) exp(-i x . xi) phi(x)`` at the polar nodes."""
    op = FioOperator(flat_phase(), symbol("unit"), fgrid, sgrid, check_patches=False)
    return op.adjoint(np.asarray(values, dtype=np.complex128)) / (2 * np.pi) ** 3


def flat_closed_form(data: InitialData, fgrid: PolarFrequencyGrid) -> HalfDensityPair:
    """``g_+- = (lam F phi0 +- i F phi1) / 2``."""
    lam = fgrid.radial_nodes[:, None]
    F0 = fourier_transform(data.phi0, fgrid, data.sgrid)
    F1 = fourier_transform(data.phi1, fgrid, data.sgrid)
    return HalfDensityPair(0.5 * (lam * F0 + 1j * F1), 0.5 * (lam * F0 - 1j * F1), fgrid)


def estimate_ratio(pair: HalfDensityPair, data: InitialData) -> float:
    """``(||lam f_+|| + ||lam f_-||) / (||grad phi0|| + ||phi1||)``; ``nan`` for zero data."""
    den = data.norm
    if den == 0:
        return float("nan")
    return sum(pair.norms()) / den


def flat_estimate_ratio(data: InitialData, fgrid: PolarFrequencyGrid) -> float:
    """The estimate ratio of the flat closed-form solution for the same data."""
    return estimate_ratio(flat_closed_form(data, fgrid), data)


def evolve_flat(pair: HalfDensityPair, t: float, sgrid: SpatialGrid,
                phase: PhaseField | None = None, **op_kw) -> np.ndarray:
    """``sum_+- int exp(i lam (-+t + x.w)) f_+-(lam w) lam^2 dlam dw`` at the grid points."""
    if phase is not None and phase.kind != "flat":
        raise ValueError("time evolution is only available for the flat phase")
    fg = pair.fgrid
    op_kw.setdefault("check_patches", False)
    op = FioOperator(flat_phase(), symbol("unit"), fg, sgrid, **op_kw)
    lam = fg.radial_nodes[:, None]
    return op.apply(np.exp(-1j * lam * t) * pair.f_plus) + op.apply(np.exp(1j * lam * t) * pair.f_minus)


def spectral_evolution(data: InitialData, t: float) -> np.ndarray:
    """Exact lattice solution ``cos(t|D|) phi0 + sin(t|D|)/|D| phi1`` by FFT."""
    sg = data.sgrid
    if not sg.is_lattice:
        raise ValueError("the spectral oracle needs a lattice grid")
    KX, KY, KZ = np.meshgrid(*sg.wavenumbers(), indexing="ij")
    K = np.sqrt(KX**2 + KY**2 + KZ**2)
    h0 = sp_fft.fftn(sg.to_cube(data.phi0))
    h1 = sp_fft.fftn(sg.to_cube(data.phi1))
    sinc = np.where(K > 0, np.sin(t * K) / np.where(K > 0, K, 1.0), t)
    return sp_fft.ifftn(np.cos(t * K) * h0 + sinc * h1).ravel()
