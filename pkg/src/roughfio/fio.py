"""Fourier integral operators with a rough phase and their dyadic pieces.

The operator acting on a density sampled on a :class:`PolarFrequencyGrid`
is the quadrature

    U f(x) = sum_{lam, w} exp(i lam v(x, w)) b(x, w) f(lam w) lam^2 w_lam w_w

with ``v(x, w) = sign * u(x, omega_sign * w)``; ``sign = omega_sign = 1``
gives the plain operator and the other choices give the backward half-wave
phases.  No factors of ``2 pi`` are inserted: in the flat case ``U`` is
``(2 pi)^3`` times the inverse Fourier transform.

Two evaluation paths exist.  ``method="direct"`` sums every term and is the
reference.  ``method="fast"`` (default) tabulates, for every direction,
``T_w(s) = sum_lam c(lam, w) exp(i lam s)`` on a uniform grid in ``s`` and
interpolates it at ``s = v(x, w)`` with high-order Lagrange stencils; its
adjoint is the exact transpose, so the normal operator is Hermitian to
rounding in both paths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .dyadic import (
    AngularPatchFamily,
    LittlewoodPaleyFamily,
    SecondFrequencyFamily,
    build_angular_family,
    build_lp_family,
    build_second_frequency_family,
)
from .grid import (
    PolarFrequencyGrid,
    SpatialGrid,
    geodesic_distance,
    polar_l2_norm,
    spatial_l2_norm,
)
from .phase import PhaseField

__all__ = [
    "SymbolField",
    "symbol",
    "FioOperator",
    "PieceSpectrum",
    "DiagonalResult",
    "LowerBound",
    "DecayTable",
    "NormEstimate",
    "apply",
    "apply_piece",
    "spectrum",
    "piece_norm",
    "correlation",
    "frequency_envelope",
    "angular_envelope",
    "orthogonality_scan",
    "diagonal_norm",
    "operator_norm",
    "lower_bound_ratio",
    "radial_envelope",
    "random_density",
    "random_ensemble",
    "baseline_constant",
]


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolField:
    """Symbol ``b(x, omega)`` of an operator.

    Built-in kinds depend on the phase only through ``grad u`` and are
    evaluated inside the compiled loops.  ``custom`` symbols take a callable
    ``func(x, omega) -> array`` (shape ``(..., n_components)``) and are only
    supported on the direct path.
    """

    kind: str
    code: int | None = None
    n_components: int = 1
    func: Callable | None = None

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def evaluate(self, phase: PhaseField, x, omega):
        """Reference evaluation with numpy, shape ``(..., n_components)``."""
        if self.kind == "custom":
            return np.asarray(self.func(x, omega)).reshape(
                np.broadcast_shapes(np.shape(x), np.shape(omega))[:-1] + (self.n_components,)
            )
        grad = phase.gradient(x, omega)
        nrm = np.linalg.norm(grad, axis=-1, keepdims=True)
        table = {
            "zero": lambda: np.zeros_like(nrm),
            "unit": lambda: np.ones_like(nrm),
            "lapse_inverse": lambda: nrm,
            "lapse_inverse_minus_one": lambda: nrm - 1.0,
            "normal": lambda: grad / nrm,
            "lapse_inverse_normal": lambda: grad,
            "gradient_and_lapse_inverse": lambda: np.concatenate([grad, nrm], axis=-1),
            "lapse": lambda: 1.0 / nrm,
        }
        return table[self.kind]()


_BUILTIN = {
    "unit": (0, 1),
    "lapse_inverse": (1, 1),
    "lapse_inverse_minus_one": (2, 1),
    "normal": (3, 3),
    "lapse_inverse_normal": (4, 3),
    "gradient_and_lapse_inverse": (5, 4),
    "lapse": (6, 1),
    "zero": (None, 1),
}


def symbol(kind: str, func: Callable | None = None, n_components: int = 1) -> SymbolField:
    """Build a symbol by name (see :data:`_BUILTIN`) or a custom one."""
    if kind == "custom":
        if func is None:
            raise ValueError("custom symbols need a callable")
        return SymbolField("custom", None, n_components, func)
    if kind not in _BUILTIN:
        raise KeyError(f"unknown symbol kind {kind!r}")
    code, ncomp = _BUILTIN[kind]
    return SymbolField(kind, code, ncomp)


# ---------------------------------------------------------------------------
# operator
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class FioOperator:
    """Discretized Fourier integral operator together with its dyadic families.

    Parameters
    ----------
    phase : PhaseField
    symbol : SymbolField
    fgrid : PolarFrequencyGrid
    sgrid : SpatialGrid
    delta : float
        Angular patch scale factor.
    alpha : float
        Exponent of the refined frequency split.
    phase_sign, omega_sign : {+1, -1}
        The phase used is ``phase_sign * u(x, omega_sign * w)`` and the
        symbol is evaluated at ``(x, omega_sign * w)``.
    method : {"fast", "direct"}
    interp_order : int
        Lagrange stencil length of the fast path.
    samples_per_wavelength : int
        Table density of the fast path at the largest radial node.
    check_patches : bool
        Require at least four angular nodes per patch.
    """

    phase: PhaseField
    symbol: SymbolField
    fgrid: PolarFrequencyGrid
    sgrid: SpatialGrid
    delta: float = 0.25
    alpha: float = 1 / 8
    phase_sign: int = 1
    omega_sign: int = 1
    method: str = "fast"
    interp_order: int = 10
    samples_per_wavelength: int = 24
    check_patches: bool = True
    _angular: dict = field(default_factory=dict, repr=False)
    _table_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.phase_sign not in (1, -1) or self.omega_sign not in (1, -1):
            raise ValueError("signs must be +1 or -1")
        if self.method not in ("fast", "direct"):
            raise ValueError("method must be 'fast' or 'direct'")
        if self.symbol.kind == "custom" and self.method == "fast":
            self.method = "direct"
        self.lp: LittlewoodPaleyFamily = build_lp_family(max(self.fgrid.j_range[1], 0))

    # -- bookkeeping -------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.fgrid.shape

    @property
    def n_components(self) -> int:
        return self.symbol.n_components

    def with_(self, **changes) -> "FioOperator":
        """Copy with some fields replaced (families are rebuilt lazily)."""
        kw = {
            k: getattr(self, k)
            for k in (
                "phase", "symbol", "fgrid", "sgrid", "delta", "alpha", "phase_sign",
                "omega_sign", "method", "interp_order", "samples_per_wavelength",
                "check_patches",
            )
        }
        kw.update(changes)
        return FioOperator(**kw)

    @property
    def octaves(self) -> list[int]:
        """Octave indices whose cutoffs meet the radial grid."""
        lam = self.fgrid.radial_nodes
        return [j for j in self.lp.indices if np.any(self.lp.piece(j, lam) > 0)]

    def angular_family(self, j: int) -> AngularPatchFamily:
        if j not in self._angular:
            nodes = self.fgrid.angular_nodes if self.check_patches else None
            self._angular[j] = build_angular_family(max(j, 0), self.delta, nodes)
        return self._angular[j]

    def second_family(self, j: int, separation: float) -> SecondFrequencyFamily:
        return build_second_frequency_family(j, self.alpha, separation)

    def patch_values(self, j: int) -> np.ndarray:
        """``eta_j^nu`` at every angular node, shape ``(n_omega, n_patches)``."""
        key = ("eta", j)
        if key not in self._table_cache:
            self._table_cache[key] = self.angular_family(j).evaluate(self.fgrid.angular_nodes)
        return self._table_cache[key]

    def mask(self, j: int | None = None, nu: int | None = None, k: int | None = None,
             separation: float = 1.0) -> np.ndarray:
        """Cutoff ``psi_j(lam) eta_j^nu(w) phi_k(lam)`` on the grid."""
        lam = self.fgrid.radial_nodes
        m = np.ones(self.shape)
        if j is None:
            if nu is not None or k is not None:
                raise KeyError("patch or interval index given without an octave")
            return m
        if j not in self.lp.indices:
            raise KeyError(f"octave {j} outside {self.lp.indices}")
        m = m * self.lp.piece(j, lam)[:, None]
        if nu is not None:
            eta = self.patch_values(j)
            if not 0 <= nu < eta.shape[1]:
                raise KeyError(f"patch {nu} outside [0, {eta.shape[1]})")
            m = m * eta[:, nu][None, :]
        if k is not None:
            fam = self.second_family(j, separation)
            m = m * fam.bump(k, lam)[:, None]
        return m

    # -- kernel plumbing ---------------------------------------------------
    def _phase_args(self):
        poly = self.phase.poly
        return (
            float(self.phase_sign),
            float(self.phase.epsilon),
            poly.amplitudes,
            poly.s_freqs,
            np.ascontiguousarray(poly.omega_freqs),
            poly.offsets,
        )

    @property
    def _dirs(self) -> np.ndarray:
        return np.ascontiguousarray(self.omega_sign * self.fgrid.angular_nodes)

    def _table_geometry(self):
        if "geom" not in self._table_cache:
            lam = self.fgrid.radial_nodes
            p = self.interp_order
            ds = 2 * np.pi / (lam.max() * self.samples_per_wavelength)
            reach = np.linalg.norm(self.sgrid.points, axis=1).max()
            reach += self.phase.epsilon * np.abs(self.phase.poly.amplitudes).sum()
            s0 = -reach - (p + 1) * ds
            ns = int(np.ceil(2 * (reach + (p + 1) * ds) / ds)) + 1
            s = s0 + ds * np.arange(ns)
            E = np.exp(1j * np.outer(s, lam))
            bary = _kernels.barycentric_weights(p)
            self._table_cache["geom"] = (s0, ds, ns, E, bary)
        return self._table_cache["geom"]

    def _code(self) -> int:
        return self.symbol.code

    # -- application -------------------------------------------------------
    def _check_density(self, f):
        f = np.asarray(f)
        if f.shape != self.shape:
            raise ValueError(f"density shape {f.shape} does not match grid {self.shape}")
        return f

    def apply(self, f, mask: np.ndarray | None = None) -> np.ndarray:
        """Apply the operator; vector symbols give shape ``(n_x, n_components)``."""
        f = self._check_density(f)
        coef = f * self.fgrid.measure
        if mask is not None:
            coef = coef * mask
        out = self._forward(coef.astype(np.complex128))
        return out[:, 0] if self.n_components == 1 else out

    def adjoint(self, g, mask: np.ndarray | None = None) -> np.ndarray:
        """Adjoint with respect to the weighted inner products on both sides."""
        g = np.asarray(g, dtype=np.complex128).reshape(len(self.sgrid), self.n_components)
        out = self._backward(np.ascontiguousarray(g))
        if mask is not None:
            out = out * mask
        return out

    def normal(self, f) -> np.ndarray:
        return self.adjoint(self.apply(f))

    def _active(self, coef):
        return np.flatnonzero(np.any(coef != 0, axis=0)).astype(np.int64)

    def _forward(self, coef):
        nx = len(self.sgrid)
        ncomp = self.n_components
        if self.symbol.is_zero:
            return np.zeros((nx, ncomp), dtype=np.complex128)
        active = self._active(coef)
        if len(active) == 0:
            return np.zeros((nx, ncomp), dtype=np.complex128)
        pts = np.ascontiguousarray(self.sgrid.points)
        if self.symbol.kind == "custom":
            return self._custom_forward(coef, active)
        args = self._phase_args()
        if self.method == "direct":
            return _kernels.direct_forward(
                pts, self._dirs, active, self.fgrid.radial_nodes, coef, *args, self._code(), ncomp
            )
        s0, ds, ns, E, bary = self._table_geometry()
        table = np.ascontiguousarray((E @ coef[:, active]).T)
        return _kernels.interp_forward(
            pts, self._dirs, active, table, s0, ds, bary, *args, self._code(), ncomp
        )

    def _backward(self, g):
        nl, nw = self.shape
        if self.symbol.is_zero:
            return np.zeros((nl, nw), dtype=np.complex128)
        active = np.arange(nw, dtype=np.int64)
        pts = np.ascontiguousarray(self.sgrid.points)
        if self.symbol.kind == "custom":
            return self._custom_backward(g)
        args = self._phase_args()
        w = self.sgrid.weights
        if self.method == "direct":
            return _kernels.direct_adjoint(
                pts, w, g, self._dirs, active, self.fgrid.radial_nodes, *args,
                self._code(), self.n_components, nw,
            )
        s0, ds, ns, E, bary = self._table_geometry()
        R = _kernels.interp_adjoint(
            pts, w, g, self._dirs, active, ns, s0, ds, bary, *args, self._code(), self.n_components
        )
        return np.conj(E).T @ R.T

    def _custom_values(self, iw):
        x = self.sgrid.points
        om = self.omega_sign * self.fgrid.angular_nodes[iw]
        b = self.symbol.evaluate(self.phase, x, om)
        v = self.phase_sign * self.phase.value(x, om)
        return b, v

    def _custom_forward(self, coef, active):
        lam = self.fgrid.radial_nodes
        out = np.zeros((len(self.sgrid), self.n_components), dtype=np.complex128)
        for iw in active:
            b, v = self._custom_values(iw)
            val = np.exp(1j * np.outer(v, lam)) @ coef[:, iw]
            out += b * val[:, None]
        return out

    def _custom_backward(self, g):
        lam = self.fgrid.radial_nodes
        out = np.zeros(self.shape, dtype=np.complex128)
        for iw in range(self.shape[1]):
            b, v = self._custom_values(iw)
            val = np.sum(np.conj(b) * g, axis=1) * self.sgrid.weights
            out[:, iw] = np.exp(-1j * np.outer(lam, v)) @ val
        return out


# ---------------------------------------------------------------------------
# functional interface
# ---------------------------------------------------------------------------


def apply(op: FioOperator, f) -> np.ndarray:
    """``U f`` at every spatial point."""
    return op.apply(f)


def apply_piece(op: FioOperator, f, j: int, nu: int | None = None, k: int | None = None,
                separation: float = 1.0) -> np.ndarray:
    """``U_j f``, ``U_j^nu f`` or ``U_j^{nu,k} f``.

    ``nu`` indexes the centers of ``op.angular_family(j)``; ``k`` indexes the
    bumps of the refined split built for the given ``separation``.
    """
    return op.apply(f, mask=op.mask(j, nu, k, separation))


@dataclass
class PieceSpectrum:
    """Energy of a density carried by each piece.

    ``gamma_j[j]**2 = sum |f|^2 psi_j dmu`` (and likewise with ``eta`` and
    ``phi_k``), so that the squares add up to ``norm**2`` exactly whenever
    the density vanishes above the top octave.  ``tail`` holds the energy
    left outside the decomposition.
    """

    norm: float
    gamma_j: dict
    gamma_j_nu: dict
    gamma_j_nu_k: dict
    tail: float

    def total_j(self) -> float:
        return float(np.sqrt(sum(g**2 for g in self.gamma_j.values()) + self.tail**2))

    def total_j_nu(self) -> float:
        return float(np.sqrt(sum(g**2 for g in self.gamma_j_nu.values()) + self.tail**2))


def spectrum(op: FioOperator, f, separation: float | None = None) -> PieceSpectrum:
    """All piece energies of ``f``.

    The refined split is included when a ``separation`` is given.
    """
    f = op._check_density(f)
    dens = np.abs(f) ** 2 * op.fgrid.measure
    lam = op.fgrid.radial_nodes
    gj, gjn, gjnk = {}, {}, {}
    covered = np.zeros_like(lam)
    for j in op.lp.indices:
        psi = op.lp.piece(j, lam)
        covered += psi
        radial = (dens * psi[:, None]).sum(axis=0)
        gj[j] = float(np.sqrt(radial.sum()))
        if gj[j] == 0:
            continue
        eta = op.patch_values(j)
        per_patch = radial @ eta
        for nu, val in enumerate(per_patch):
            gjn[(j, nu)] = float(np.sqrt(max(val, 0.0)))
        if separation is not None:
            fam = op.second_family(j, separation)
            for kk in range(fam.count):
                w_k = (dens * (psi * fam.bump(kk, lam))[:, None]).sum(axis=0) @ eta
                for nu, val in enumerate(w_k):
                    gjnk[(j, nu, kk)] = float(np.sqrt(max(val, 0.0)))
    tail = float(np.sqrt(max((dens * (1 - covered)[:, None]).sum(), 0.0)))
    return PieceSpectrum(
        norm=polar_l2_norm(f, op.fgrid), gamma_j=gj, gamma_j_nu=gjn, gamma_j_nu_k=gjnk, tail=tail
    )


def piece_norm(op: FioOperator, f, j=None, nu=None, k=None, separation=1.0) -> float:
    """``|| cutoff * f ||`` for the given piece (the normalization of the scans)."""
    return polar_l2_norm(op.mask(j, nu, k, separation) * op._check_density(f), op.fgrid)


def _inner(a, b, sgrid: SpatialGrid) -> complex:
    a = np.asarray(a).reshape(len(sgrid), -1)
    b = np.asarray(b).reshape(len(sgrid), -1)
    return complex(np.sum(a * np.conj(b) * sgrid.weights[:, None]))


def correlation(op: FioOperator, f, piece_a, piece_b, separation: float = 1.0) -> complex:
    """``<U_a f, U_b f>`` over the spatial grid; pieces are ``(j, nu, k)`` tuples."""
    pa = tuple(piece_a) + (None,) * (3 - len(piece_a))
    pb = tuple(piece_b) + (None,) * (3 - len(piece_b))
    ua = op.apply(f, mask=op.mask(*pa, separation=separation))
    if pa == pb:
        return complex(spatial_l2_norm(ua, op.sgrid) ** 2)
    ub = op.apply(f, mask=op.mask(*pb, separation=separation))
    return _inner(ua, ub, op.sgrid)


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------


@dataclass
class DecayTable:
    """Normalized correlations against a predicted envelope.

    ``rows`` are dicts with keys ``a``, ``b`` (piece labels), ``separation``
    (``|j-k|`` or ``2^{j/2}|nu-nu'|``), ``measured``, ``envelope`` and
    ``ratio = measured / envelope``; ``constant`` is the largest ratio.
    """

    mode: str
    rows: list
    constant: float
    skipped: int = 0

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def medians_by_bin(self, edges):
        """Median measured value per separation bin (empty bins omitted)."""
        sep = self.column("separation")
        meas = self.column("measured")
        out = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            sel = (sep >= lo) & (sep < hi)
            if sel.any():
                out.append((0.5 * (lo + hi), float(np.median(meas[sel])), int(sel.sum())))
        return out


def frequency_envelope(j: int, k: int) -> float:
    return 2.0 ** (-abs(j - k) / 2)


def angular_envelope(j: int, sep: float, alpha: float = 1 / 8) -> float:
    """Two-term angular envelope at octave ``j`` and center distance ``sep``."""
    t = 2.0 ** (j / 2) * sep
    return 1.0 / (2.0 ** (j * alpha / 2) * t ** (2 - alpha)) + 1.0 / t**3


def orthogonality_scan(op: FioOperator, f, mode: str = "frequency", octaves=None,
                       j: int | None = None, max_patches: int | None = None,
                       min_gap: int = 3, seed: int = 0, floor: float = 1e-12) -> DecayTable:
    """Measure normalized correlations between pieces.

    Parameters
    ----------
    mode : {"frequency", "angle"}
        Frequency mode correlates ``U_j f`` and ``U_k f`` for ``|j-k| >=
        min_gap``; angle mode correlates ``U_j^nu f`` and ``U_j^nu' f`` for
        all pairs of patches at octave ``j`` whose supports are disjoint.
    octaves : list of int, optional
        Frequency-mode window (defaults to all octaves on the grid).
    max_patches : int, optional
        Angle-mode subsample of patches (seeded).
    """
    rows = []
    skipped = 0
    if mode == "frequency":
        octs = list(op.octaves if octaves is None else octaves)
        if len(octs) < 4:
            raise ValueError("frequency scan needs at least 4 octaves")
        images = {jj: op.apply(f, mask=op.mask(jj)) for jj in octs}
        norms = {jj: piece_norm(op, f, jj) for jj in octs}
        for a_i, ja in enumerate(octs):
            for jb in octs[a_i + 1:]:
                if abs(ja - jb) < min_gap:
                    continue
                if norms[ja] < floor or norms[jb] < floor:
                    skipped += 1
                    continue
                meas = abs(_inner(images[ja], images[jb], op.sgrid)) / (norms[ja] * norms[jb])
                env = frequency_envelope(ja, jb)
                rows.append({"a": ja, "b": jb, "separation": abs(ja - jb),
                             "measured": meas, "envelope": env, "ratio": meas / env})
    elif mode == "angle":
        if j is None:
            raise ValueError("angle mode needs an octave j")
        fam = op.angular_family(j)
        if len(fam) < 8:
            raise ValueError("angle scan needs at least 8 patches")
        patches = np.arange(len(fam))
        norms_all = np.array([piece_norm(op, f, j, nu) for nu in patches])
        patches = patches[norms_all >= floor]
        skipped += int(len(fam) - len(patches))
        if max_patches is not None and len(patches) > max_patches:
            rng = np.random.default_rng(seed)
            patches = np.sort(rng.choice(patches, max_patches, replace=False))
        images = {nu: op.apply(f, mask=op.mask(j, nu)) for nu in patches}
        for a_i, na in enumerate(patches):
            for nb in patches[a_i + 1:]:
                sep = float(geodesic_distance(fam.centers[na], fam.centers[nb]))
                if sep < 2 * fam.radius:
                    continue
                chord = float(np.linalg.norm(fam.centers[na] - fam.centers[nb]))
                meas = abs(_inner(images[na], images[nb], op.sgrid)) / (norms_all[na] * norms_all[nb])
                env = angular_envelope(j, chord, op.alpha)
                rows.append({"a": int(na), "b": int(nb), "separation": 2 ** (j / 2) * chord,
                             "measured": meas, "envelope": env, "ratio": meas / env})
    else:
        raise ValueError("mode must be 'frequency' or 'angle'")
    constant = max((r["ratio"] for r in rows), default=0.0)
    return DecayTable(mode=mode, rows=rows, constant=float(constant), skipped=skipped)


@dataclass
class DiagonalResult:
    norm: float
    gamma: float
    ratio: float
    skipped: bool


def diagonal_norm(op: FioOperator, f, j: int, nu: int, floor: float = 1e-12) -> DiagonalResult:
    """``||U_j^nu f||`` and its ratio to ``||psi_j eta_j^nu f||``."""
    gamma = piece_norm(op, f, j, nu)
    image = op.apply(f, mask=op.mask(j, nu))
    nrm = spatial_l2_norm(image, op.sgrid)
    if gamma < floor:
        return DiagonalResult(nrm, gamma, 0.0, True)
    return DiagonalResult(nrm, gamma, nrm / gamma, False)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


@dataclass
class NormEstimate:
    value: float
    iterations: int
    converged: bool
    history: list


def operator_norm(op: FioOperator, ensemble_size: int = 1, power_iters: int = 30,
                  seed: int = 0, tol: float = 1e-6) -> NormEstimate:
    """Largest singular value by power iteration on ``U* U``.

    ``ensemble_size`` independent seeded starts are run; the largest
    estimate is returned.  The iteration stops early once successive
    estimates agree to ``tol`` relative; otherwise the last value is
    returned with ``converged = False`` and a warning.
    """
    if ensemble_size < 1:
        raise ValueError("ensemble_size must be >= 1")
    if power_iters < 5:
        raise ValueError("power_iters must be >= 5")
    if op.symbol.is_zero:
        return NormEstimate(0.0, 0, True, [0.0])
    best = None
    for m in range(ensemble_size):
        rng = np.random.default_rng([seed, m])
        x = rng.standard_normal(op.shape) + 1j * rng.standard_normal(op.shape)
        x /= polar_l2_norm(x, op.fgrid)
        hist = []
        converged = False
        it = 0
        for it in range(1, power_iters + 1):
            y = op.normal(x)
            est = math.sqrt(max(np.real(np.sum(np.conj(x) * y * op.fgrid.measure)), 0.0))
            hist.append(est)
            ny = polar_l2_norm(y, op.fgrid)
            if ny == 0:
                converged = True
                break
            x = y / ny
            if len(hist) > 1 and abs(hist[-1] - hist[-2]) <= tol * hist[-1]:
                converged = True
                break
        cand = NormEstimate(hist[-1], it, converged, hist)
        if best is None or cand.value > best.value:
            best = cand
    if not best.converged:
        warnings.warn("power iteration did not converge", RuntimeWarning, stacklevel=2)
    return best


_BASELINES: dict = {}


def baseline_constant(fgrid: PolarFrequencyGrid, sgrid: SpatialGrid, power_iters: int = 40,
                      seed: int = 0) -> float:
    """Norm of the flat unit-symbol operator on these grids (cached).

    This is the discrete counterpart of the Plancherel factor
    ``(2 pi)^{3/2}``.
    """
    key = (id(fgrid), id(sgrid))
    if key not in _BASELINES:
        from .phase import flat_phase

        op = FioOperator(flat_phase(), symbol("unit"), fgrid, sgrid, check_patches=False)
        _BASELINES[key] = operator_norm(op, 1, power_iters, seed).value
    return _BASELINES[key]


# ---------------------------------------------------------------------------
# random densities
# ---------------------------------------------------------------------------


def radial_envelope(lam, j_max: int, width: float | None = None):
    """Smooth profile vanishing above ``2^{j_max}`` (so no energy leaves the decomposition)."""
    from .dyadic import cutoff

    lam = np.asarray(lam, dtype=float)
    width = 2.0 ** (j_max - 1) if width is None else width
    return np.exp(-0.5 * (lam / width) ** 2) * cutoff(lam / 2.0 ** (j_max - 1))


def random_density(fgrid: PolarFrequencyGrid, rng, n_packets: int = 4, spread: float = 1.5,
                   j_max: int | None = None, width: float | None = None) -> np.ndarray:
    """Superposition of seeded wave packets ``sum_m c_m exp(-i xi . x_m) g(|xi|)``.

    The centers ``x_m`` are drawn uniformly in the ball of radius ``spread``
    and the coefficients are complex Gaussian, so the images under the
    operators are concentrated near the origin.  The radial profile ``g`` is
    :func:`radial_envelope`.
    """
    j_max = fgrid.j_range[1] if j_max is None else j_max
    xi = fgrid.points()
    env = radial_envelope(fgrid.radial_nodes, j_max, width)[:, None]
    f = np.zeros(fgrid.shape, dtype=np.complex128)
    for _ in range(n_packets):
        d = rng.standard_normal(3)
        d *= spread * rng.uniform() ** (1 / 3) / np.linalg.norm(d)
        c = rng.standard_normal() + 1j * rng.standard_normal()
        f += c * np.exp(-1j * xi @ d)
    return f * env


def random_ensemble(fgrid: PolarFrequencyGrid, size: int, seed: int, **kw) -> list[np.ndarray]:
    return [random_density(fgrid, np.random.default_rng([seed, m]), **kw) for m in range(size)]


@dataclass
class LowerBound:
    ratio: float
    ratios: list
    hypothesis_ok: bool


def lower_bound_ratio(op: FioOperator, ensemble_size: int = 8, seed: int = 0,
                      baseline: float | None = None, **kw) -> LowerBound:
    """Minimum over a seeded ensemble of ``||U f|| / (baseline ||f||)``.

    A zero ratio (for instance a vanishing symbol) is reported with
    ``hypothesis_ok = False``.
    """
    base = baseline_constant(op.fgrid, op.sgrid) if baseline is None else baseline
    ratios = []
    for f in random_ensemble(op.fgrid, ensemble_size, seed, **kw):
        nf = polar_l2_norm(f, op.fgrid)
        ratios.append(spatial_l2_norm(op.apply(f), op.sgrid) / (base * nf))
    r = float(min(ratios))
    return LowerBound(r, ratios, r > 0)
