"""The kernel of ``U_j^nu (U_j^nu)^*`` and its decay.

For one angular piece the composition with its adjoint has kernel

    K(x, y) = int eta_j^nu(w) Psi_j(u(x, w) - u(y, w)) dw,
    Psi_j(s) = int psi(2^-j lam) lam^2 exp(i lam s) dlam = 2^{3j} Psi_0(2^j s).

``Psi_0`` is tabulated once with a dense trapezoid rule (the integrand is
smooth and compactly supported, so the rule is spectrally accurate) and
interpolated.  The angular integral uses a gnomonic product grid on the
support of ``eta_j^nu`` whose density adapts to the oscillation of the
integrand for each pair of points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dyadic import AngularPatchFamily, LittlewoodPaleyFamily
from .grid import SpatialGrid, spatial_l2_norm, tangent_frame
from .phase import PhaseField, change_of_variable, flat_phase

__all__ = [
    "radial_profile",
    "CapQuadrature",
    "cap_quadrature",
    "evaluate_kernel",
    "kernel_row",
    "envelope_arguments",
    "decay_envelope",
    "KernelProbe",
    "DecayReport",
    "decay_ratio_scan",
    "SchurResult",
    "schur_row_sum",
    "flat_comparison_gap",
]

_T_STEP = 0.04
_INTERP = 10
_MU_NODES = 4096


class _RadialTable:
    """Lazily extended table of ``Psi_0(t)`` for ``t >= 0``."""

    def __init__(self):
        self.values = np.zeros(0, dtype=np.complex128)
        mu = np.linspace(0.5, 2.0, _MU_NODES + 1)
        w = np.full(mu.shape, mu[1] - mu[0])
        w[[0, -1]] *= 0.5
        self._mu = mu
        self._w = w * LittlewoodPaleyFamily.band(mu) * mu**2
        self.bary = _kernels.barycentric_weights(_INTERP)

    def ensure(self, t_max: float) -> np.ndarray:
        need = int(np.ceil(t_max / _T_STEP)) + _INTERP + 2
        have = len(self.values)
        if need > have:
            need = max(need, 2 * have)
            t = _T_STEP * np.arange(have, need)
            new = np.empty(len(t), dtype=np.complex128)
            for s in range(0, len(t), 2048):
                blk = t[s:s + 2048]
                new[s:s + 2048] = np.exp(1j * np.outer(blk, self._mu)) @ self._w
            self.values = np.concatenate([self.values, new])
        return self.values


_TABLE = _RadialTable()


def radial_profile(j: int, s) -> np.ndarray:
    """``Psi_j(s) = int psi(2^-j lam) lam^2 exp(i lam s) dlam`` (interpolated)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = 2.0**j * s
    table = _TABLE.ensure(np.abs(t).max())
    lw = np.empty(_INTERP)
    vals = np.array([_kernels._interp_table(ti, table, _T_STEP, _TABLE.bary, lw) for ti in t])
    return 2.0 ** (3 * j) * vals


# ---------------------------------------------------------------------------
# angular quadrature on one patch
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CapQuadrature:
    """Nodes on the support of one bump, with weights already multiplied by the bump."""

    nodes: np.ndarray
    weights: np.ndarray
    n: int

    @property
    def mass(self) -> float:
        """``int eta dw``."""
        return float(self.weights.sum())


_CAP_SIZES = (32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024, 1536, 2048)


def cap_quadrature(family: AngularPatchFamily, nu: int, n: int) -> CapQuadrature:
    """Midpoint rule on the gnomonic square that contains the support of ``eta_j^nu``."""
    center = family.centers[nu]
    e1, e2 = (v[0] for v in tangent_frame(center))
    R = np.tan(min(family.radius, 1.5))
    h = 2 * R / n
    t = -R + h * (np.arange(n) + 0.5)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    T1 = T1.ravel()
    T2 = T2.ravel()
    inside = T1**2 + T2**2 < R**2
    T1, T2 = T1[inside], T2[inside]
    rho2 = 1 + T1**2 + T2**2
    om = (center[None, :] + T1[:, None] * e1 + T2[:, None] * e2) / np.sqrt(rho2)[:, None]
    eta = family.evaluate_local(om, nu)
    keep = eta > 0
    w = h * h * rho2[keep] ** -1.5 * eta[keep]
    return CapQuadrature(nodes=np.ascontiguousarray(om[keep]), weights=w, n=n)


def _cap_size(family: AngularPatchFamily, j: int, spread: float, distance: float,
              per_period: float) -> int:
    """Grid size resolving an oscillation of the given spread of ``d_omega u``."""
    R = np.tan(min(family.radius, 1.5))
    variation = spread * 2 * R + distance * R**2
    periods = 2.0 ** (j + 1) * variation / (2 * np.pi)
    need = per_period * periods + 32
    for n in _CAP_SIZES:
        if n >= need:
            return n
    return _CAP_SIZES[-1]


def _phase_args(phase: PhaseField):
    poly = phase.poly
    return (
        float(phase.epsilon),
        poly.amplitudes,
        poly.s_freqs,
        np.ascontiguousarray(poly.omega_freqs),
        poly.offsets,
    )


def kernel_row(phase: PhaseField, quad: CapQuadrature, j: int, x, ys) -> np.ndarray:
    """``K(x, y)`` for many ``y`` with a fixed angular quadrature."""
    x = np.asarray(x, dtype=float)
    ys = np.ascontiguousarray(np.atleast_2d(ys), dtype=float)
    reach = np.linalg.norm(ys - x, axis=1).max() + 2 * phase.epsilon * np.abs(phase.poly.amplitudes).sum()
    table = _TABLE.ensure(2.0**j * reach * 1.05 + 1.0)
    vals = _kernels.kernel_rows(
        x, ys, quad.nodes, quad.weights, table, _T_STEP, _TABLE.bary, 2.0**j, *_phase_args(phase)
    )
    return 2.0 ** (3 * j) * vals


def envelope_arguments(phase: PhaseField, j: int, nu, x, y):
    """``(2^j |du|, 2^{j/2} |d d_omega u|)`` at direction ``nu``."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    du = phase.value(x, nu) - phase.value(y, nu)
    dw = phase.omega_gradient(x, nu) - phase.omega_gradient(y, nu)
    return 2.0**j * np.abs(du), 2.0 ** (j / 2) * np.linalg.norm(dw, axis=-1)


def evaluate_kernel(phase: PhaseField, family: AngularPatchFamily, j: int, nu: int, x, y,
                    per_period: float = 12.0, quad: CapQuadrature | None = None) -> complex:
    """Quadrature value of ``K(x, y)`` for the piece ``(j, nu)``.

    The angular grid is chosen from the oscillation expected between ``x``
    and ``y`` unless ``quad`` is supplied; ``per_period`` controls its density.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if quad is None:
        center = family.centers[nu]
        dw = phase.omega_gradient(x, center) - phase.omega_gradient(y, center)
        n = _cap_size(family, j, float(np.linalg.norm(dw)), float(np.linalg.norm(x - y)), per_period)
        quad = cap_quadrature(family, nu, n)
    return complex(kernel_row(phase, quad, j, x, y[None, :])[0])


def decay_envelope(phase: PhaseField, j: int, nu, x, y) -> np.ndarray:
    """``2^j (1 + |A - B|)^-2 * 2^j (1 + B)^-3`` with ``A = 2^j|du|``, ``B = 2^{j/2}|d d_omega u|``."""
    A, B = envelope_arguments(phase, j, nu, x, y)
    return 2.0**j * (1 + np.abs(A - B)) ** -2 * 2.0**j * (1 + B) ** -3


# ---------------------------------------------------------------------------
# decay scan
# ---------------------------------------------------------------------------

DEFAULT_TARGETS_A = (0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0)
DEFAULT_TARGETS_B = (0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0)


@dataclass
class KernelProbe:
    """Seeded pair sampler stratified by the two envelope arguments.

    For every target pair ``(A, B)`` it draws ``pairs_per_shell`` base
    points ``x`` in the ball of radius ``spread`` and sets
    ``y = x + s A 2^-j nu + B 2^{-j/2} e`` with a random sign ``s`` and a
    random unit tangent ``e``; for the flat phase this realizes the
    arguments exactly.
    """

    j: int
    nu: int
    family: AngularPatchFamily
    seed: int = 0
    pairs_per_shell: int = 8
    spread: float = 1.2
    targets_a: tuple = DEFAULT_TARGETS_A
    targets_b: tuple = DEFAULT_TARGETS_B

    def pairs(self):
        rng = np.random.default_rng([self.seed, self.j, self.nu])
        center = self.family.centers[self.nu]
        out = []
        for A in self.targets_a:
            for B in self.targets_b:
                for _ in range(self.pairs_per_shell):
                    x = rng.standard_normal(3)
                    x *= self.spread * rng.uniform() ** (1 / 3) / np.linalg.norm(x)
                    e = rng.standard_normal(3)
                    e -= e.dot(center) * center
                    e /= np.linalg.norm(e)
                    s = rng.choice([-1.0, 1.0])
                    y = x + s * A * 2.0**-self.j * center + B * 2.0 ** (-self.j / 2) * e
                    out.append(((A, B), x, y))
        return out

    def translated(self, shift) -> list:
        shift = np.asarray(shift, dtype=float)
        return [(key, x + shift, y + shift) for key, x, y in self.pairs()]


@dataclass
class DecayReport:
    j: int
    rows: list
    sup_ratio: float
    per_stratum: dict
    diagonal: float
    far_max: float


def decay_ratio_scan(probe: KernelProbe, phase: PhaseField, per_period: float = 12.0,
                     pairs=None) -> DecayReport:
    """Sup over sampled pairs of ``|K(x, y)| / decay_envelope``.

    ``far_max`` is the largest ``|K(x, y)| / K(x, x)`` among pairs whose
    larger envelope argument exceeds 100.
    """
    fam = probe.family
    j = probe.j
    center = fam.centers[probe.nu]
    pairs = probe.pairs() if pairs is None else pairs
    quads: dict[int, CapQuadrature] = {}
    rows = []
    diag = None
    for key, x, y in pairs:
        dw = phase.omega_gradient(x, center) - phase.omega_gradient(y, center)
        n = _cap_size(fam, j, float(np.linalg.norm(dw)), float(np.linalg.norm(x - y)), per_period)
        if n not in quads:
            quads[n] = cap_quadrature(fam, probe.nu, n)
        K = complex(kernel_row(phase, quads[n], j, x, y[None, :])[0])
        if diag is None:
            Kxx = kernel_row(phase, quads[min(quads)], j, x, x[None, :])[0]
            diag = abs(Kxx)
        A, B = envelope_arguments(phase, j, center, x, y)
        env = float(decay_envelope(phase, j, center, x, y)[0])
        rows.append({"stratum": key, "x": x, "y": y, "A": float(A[0]), "B": float(B[0]),
                     "K": abs(K), "envelope": env, "ratio": abs(K) / env, "n_cap": n})
    per = {}
    for r in rows:
        per[r["stratum"]] = max(per.get(r["stratum"], 0.0), r["ratio"])
    far = [r["K"] / diag for r in rows if max(r["A"], r["B"]) > 100]
    return DecayReport(
        j=j,
        rows=rows,
        sup_ratio=max(r["ratio"] for r in rows),
        per_stratum=per,
        diagonal=float(diag),
        far_max=float(max(far)) if far else 0.0,
    )


# ---------------------------------------------------------------------------
# Schur test
# ---------------------------------------------------------------------------


def _sinh_nodes(extent: float, count: int, scale: float = 1.0):
    """Symmetric nodes ``scale * sinh(t)`` on ``[-extent, extent]`` with trapezoid weights."""
    tmax = np.arcsinh(extent / scale)
    t = np.linspace(-tmax, tmax, count)
    dt = t[1] - t[0]
    w = np.full(count, dt)
    w[[0, -1]] *= 0.5
    return scale * np.sinh(t), w * scale * np.cosh(t)


def schur_points(x, center, j: int, extent: float = 40.0, n_normal: int = 65,
                 n_radial: int = 28, n_angle: int = 16):
    """Anisotropic quadrature around ``x`` in the coordinates
    ``a = 2^j (y - x) . nu`` and ``b = 2^{j/2} P_nu (y - x)``.

    Returns points and volume weights in ``y``.
    """
    e1, e2 = (v[0] for v in tangent_frame(center))
    a, wa = _sinh_nodes(extent, n_normal)
    r, wr = _sinh_nodes(extent, 2 * n_radial - 1)
    r, wr = r[n_radial - 1:], wr[n_radial - 1:].copy()
    wr[0] *= 0.5
    wr = wr * r
    wr[0] = np.pi * (r[1] / 2) ** 2 / (2 * np.pi)
    th = 2 * np.pi * np.arange(n_angle) / n_angle
    wth = np.full(n_angle, 2 * np.pi / n_angle)
    bpts = [(0.0, 0.0, 2 * np.pi * wr[0])]
    for ri, wri in zip(r[1:], wr[1:]):
        for t, wt in zip(th, wth):
            bpts.append((ri * np.cos(t), ri * np.sin(t), wri * wt))
    bpts = np.array(bpts)
    A = np.repeat(a, len(bpts))
    WA = np.repeat(wa, len(bpts))
    B = np.tile(bpts, (len(a), 1))
    d = (A[:, None] * 2.0**-j * center[None, :]
         + 2.0 ** (-j / 2) * (B[:, 0:1] * e1 + B[:, 1:2] * e2))
    w = WA * B[:, 2] * 2.0 ** (-2 * j)
    return x[None, :] + d, w


@dataclass
class SchurResult:
    row_sum: float
    flat_row_sum: float
    normalized: float


def schur_row_sum(phase: PhaseField, family: AngularPatchFamily, j: int, nu: int, x,
                  sgrid=None, per_period: float = 8.0, extent: float = 40.0) -> SchurResult:
    """``int |K(x, y)| dy`` and its ratio to the flat value at the same ``j``.

    When ``sgrid`` is omitted the anisotropic grid of :func:`schur_points`
    is used; it resolves the kernel at every octave with the same number of
    nodes.
    """
    x = np.asarray(x, dtype=float)
    center = family.centers[nu]
    if sgrid is None:
        ys, w = schur_points(x, center, j, extent)
    else:
        ys, w = sgrid.points, sgrid.weights
    dist = np.linalg.norm(ys - x, axis=1)

    def total(ph):
        spread = np.linalg.norm(
            ph.omega_gradient(ys, center) - ph.omega_gradient(x, center), axis=-1)
        sizes = np.array([_cap_size(family, j, s, d, per_period) for s, d in zip(spread, dist)])
        acc = 0.0
        for n in np.unique(sizes):
            sel = sizes == n
            quad = cap_quadrature(family, nu, int(n))
            acc += float(np.sum(np.abs(kernel_row(ph, quad, j, x, ys[sel])) * w[sel]))
        return acc

    value = total(phase)
    flat = value if phase.epsilon == 0 else total(flat_phase())
    return SchurResult(row_sum=value, flat_row_sum=flat, normalized=value / flat)


# ---------------------------------------------------------------------------
# comparison with the flat piece
# ---------------------------------------------------------------------------


def flat_comparison_gap(op, f, j: int, nu: int, floor: float = 1e-12) -> float:
    """``|| S_j^nu f - S~_j^nu f || / gamma_j^nu``.

    ``S_j^nu`` is the piece of the unit-symbol operator; ``S~_j^nu`` applies
    the flat piece at the displaced points ``phi_nu(x)``.  Returns ``nan``
    when the piece norm falls below ``floor``.
    """
    from .fio import FioOperator, piece_norm, symbol

    gamma = piece_norm(op, f, j, nu)
    if gamma < floor:
        return float("nan")
    fam = op.angular_family(j)
    center = fam.centers[nu]
    mask = op.mask(j, nu)
    unit = op.with_(symbol=symbol("unit"))
    S = unit.apply(f, mask=mask)
    mapped, _ = change_of_variable(op.phase, center, op.sgrid.points)
    moved = SpatialGrid(points=mapped, weights=op.sgrid.weights)
    flat = FioOperator(flat_phase(), symbol("unit"), op.fgrid, moved, delta=op.delta,
                       alpha=op.alpha, check_patches=False)
    flat._table_cache[("eta", j)] = op.patch_values(j)
    St = flat.apply(f, mask=mask)
    return spatial_l2_norm(S - St, op.sgrid) / gamma
