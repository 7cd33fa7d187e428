"""Smooth partitions of unity in frequency, angle and inside one octave.

All bumps are built from the ``exp(-1/t)`` smooth step, so every cutoff is
C-infinity and vanishes identically outside its declared support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import fibonacci_sphere, geodesic_distance

__all__ = [
    "smooth_step",
    "smooth_step_derivatives",
    "cutoff",
    "cutoff_derivatives",
    "LittlewoodPaleyFamily",
    "AngularPatchFamily",
    "SecondFrequencyFamily",
    "build_lp_family",
    "build_angular_family",
    "build_second_frequency_family",
]


def _h(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    pos = y > 0
    out[pos] = np.exp(-1.0 / y[pos])
    return out


def _h_derivs(y):
    y = np.asarray(y, dtype=float)
    h0 = _h(y)
    h1 = np.zeros_like(y)
    h2 = np.zeros_like(y)
    pos = y > 0
    yp = y[pos]
    h1[pos] = h0[pos] / yp**2
    h2[pos] = h0[pos] * (1.0 / yp**4 - 2.0 / yp**3)
    return h0, h1, h2


def smooth_step(y):
    """C-infinity step: 0 for ``y <= 0``, 1 for ``y >= 1``."""
    y = np.asarray(y, dtype=float)
    a = _h(y)
    b = _h(1.0 - y)
    return a / (a + b)


def smooth_step_derivatives(y):
    """Return the smooth step and its first two derivatives."""
    y = np.asarray(y, dtype=float)
    a0, a1, a2 = _h_derivs(y)
    b0, b1, b2 = _h_derivs(1.0 - y)
    b1 = -b1
    d = a0 + b0
    d1 = a1 + b1
    num = a1 * b0 - a0 * b1
    num1 = a2 * b0 - a0 * b2
    s0 = a0 / d
    s1 = num / d**2
    s2 = num1 / d**2 - 2.0 * num * d1 / d**3
    return s0, s1, s2


def cutoff(t):
    """Even cutoff equal to 1 on ``|t| <= 1`` and 0 on ``|t| >= 2``."""
    return smooth_step(2.0 - np.abs(np.asarray(t, dtype=float)))


def cutoff_derivatives(t):
    """Cutoff and its first two derivatives in ``t``."""
    t = np.asarray(t, dtype=float)
    s0, s1, s2 = smooth_step_derivatives(2.0 - np.abs(t))
    sgn = np.sign(t)
    return s0, -sgn * s1, s2


# ---------------------------------------------------------------------------
# first dyadic decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LittlewoodPaleyFamily:
    """Low-pass ``phi(lam) = chi(2 lam)`` plus bands ``psi(2^-j lam)``.

    With ``psi(lam) = chi(lam) - chi(2 lam)`` the sum telescopes to
    ``chi(2^-j_max lam)``, which is exactly 1 on ``[0, 2^j_max]``.
    Index ``j = -1`` denotes the low-pass piece.
    """

    j_max: int

    @property
    def indices(self) -> list[int]:
        return list(range(-1, self.j_max + 1))

    @staticmethod
    def low_cutoff(lam):
        return cutoff(2.0 * np.asarray(lam, dtype=float))

    @staticmethod
    def band(lam):
        lam = np.asarray(lam, dtype=float)
        return cutoff(lam) - cutoff(2.0 * lam)

    def piece(self, j: int, lam):
        if j < -1 or j > self.j_max:
            raise KeyError(f"octave {j} outside [-1, {self.j_max}]")
        if j == -1:
            return self.low_cutoff(lam)
        return self.band(np.asarray(lam, dtype=float) * 2.0**-j)

    def support(self, j: int) -> tuple[float, float]:
        if j == -1:
            return (0.0, 1.0)
        return (2.0 ** (j - 1), 2.0 ** (j + 1))

    def total(self, lam):
        return sum(self.piece(j, lam) for j in self.indices)

    @property
    def covered_range(self) -> tuple[float, float]:
        return (0.0, 2.0**self.j_max)


def build_lp_family(j_max: int) -> LittlewoodPaleyFamily:
    if j_max < 0:
        raise ValueError("j_max must be >= 0")
    return LittlewoodPaleyFamily(int(j_max))


# ---------------------------------------------------------------------------
# angular patches
# ---------------------------------------------------------------------------

# centers per unit of 2^j / delta^2; support radius in units of delta 2^{-j/2}
_PATCH_DENSITY = 3.0
_SUPPORT_RADIUS = 2.0
_PLATEAU_FRACTION = 0.45


@dataclass(frozen=True, eq=False)
class AngularPatchFamily:
    """Normalized smooth caps ``eta_j^nu`` on the unit sphere.

    Each raw cap equals 1 within ``plateau`` of its center and vanishes beyond
    ``radius`` (geodesic); dividing by the sum of all caps gives an exact
    partition of unity.
    """

    j: int
    delta: float
    centers: np.ndarray
    radius: float
    plateau: float

    @property
    def scale(self) -> float:
        """Nominal patch size ``delta * 2^{-j/2}``."""
        return self.delta * 2.0 ** (-self.j / 2.0)

    def __len__(self) -> int:
        return len(self.centers)

    def _raw(self, d):
        y = (self.radius - d) / (self.radius - self.plateau)
        return smooth_step(y)

    def raw_caps(self, omega):
        omega = np.atleast_2d(omega)
        d = geodesic_distance(omega[:, None, :], self.centers[None, :, :])
        return self._raw(d)

    def evaluate(self, omega, nu_index=None):
        """Values of all bumps (shape ``(n, n_patches)``) or of one bump."""
        caps = self.raw_caps(omega)
        total = caps.sum(axis=1, keepdims=True)
        if np.any(total <= 0):
            raise RuntimeError("angular caps do not cover the sphere")
        vals = caps / total
        if nu_index is None:
            return vals
        return vals[:, nu_index]

    def evaluate_local(self, omega, nu_index: int):
        """Value of one bump, normalizing only by the caps that can overlap it."""
        omega = np.atleast_2d(omega)
        nbrs = self.neighbors(nu_index)
        d = geodesic_distance(omega[:, None, :], self.centers[nbrs][None, :, :])
        caps = self._raw(d)
        own = caps[:, list(nbrs).index(nu_index)]
        total = caps.sum(axis=1)
        out = np.zeros(len(omega))
        inside = own > 0
        out[inside] = own[inside] / total[inside]
        return out

    def gradient(self, omega, nu_index: int, step: float = 1e-6):
        """Tangential gradient of one bump by central differences."""
        omega = np.atleast_2d(omega)
        from .grid import tangent_frame

        e1, e2 = tangent_frame(omega)
        grads = []
        for e in (e1, e2):
            plus = omega + step * e
            minus = omega - step * e
            plus /= np.linalg.norm(plus, axis=1, keepdims=True)
            minus /= np.linalg.norm(minus, axis=1, keepdims=True)
            grads.append(
                (self.evaluate(plus, nu_index) - self.evaluate(minus, nu_index))
                / (2 * step)
            )
        return np.stack(grads, axis=-1)

    def support_mask(self, omega, nu_index: int):
        omega = np.atleast_2d(omega)
        d = geodesic_distance(omega, self.centers[nu_index][None, :])
        return d < self.radius

    def neighbors(self, nu_index: int) -> np.ndarray:
        """Indices of patches whose supports intersect patch ``nu_index``."""
        d = geodesic_distance(self.centers, self.centers[nu_index][None, :])
        return np.flatnonzero(d < 2 * self.radius)


def build_angular_family(j: int, delta: float, angular_nodes=None) -> AngularPatchFamily:
    """Angular partition of unity at octave ``j`` with patch scale ``delta 2^{-j/2}``.

    If ``angular_nodes`` is given, every patch support must contain at least
    four of them.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    scale = delta * 2.0 ** (-j / 2.0)
    count = max(12, int(math.ceil(_PATCH_DENSITY * 2.0**j / delta**2)))
    centers = fibonacci_sphere(count)
    radius = _SUPPORT_RADIUS * scale
    fam = AngularPatchFamily(
        j=int(j),
        delta=float(delta),
        centers=centers,
        radius=radius,
        plateau=_PLATEAU_FRACTION * radius,
    )
    if angular_nodes is not None:
        d = geodesic_distance(
            np.asarray(angular_nodes)[:, None, :], centers[None, :, :]
        )
        per_patch = (d < radius).sum(axis=0)
        if per_patch.min() < 4:
            raise ValueError(
                f"octave {j} too fine for the angular grid: a patch holds "
                f"{per_patch.min()} quadrature nodes (need >= 4)"
            )
    return fam


# ---------------------------------------------------------------------------
# refined split of one octave
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SecondFrequencyFamily:
    """Equal-width smooth bumps ``phi_k`` covering ``[2^{j-1}, 2^{j+1}]``.

    The low-pass index ``j = -1`` uses ``[0, 1]``.
    """

    j: int
    alpha: float
    separation: float
    breaks: np.ndarray
    overlap: float

    @property
    def count(self) -> int:
        return len(self.breaks) - 1

    @property
    def interval(self) -> tuple[float, float]:
        """``[2^{j-1}, 2^{j+1}]``, or ``[0, 1]`` for the low-pass index ``j = -1``."""
        return (float(self.breaks[0]), float(self.breaks[-1]))

    def _rise(self, lam, b):
        return smooth_step((lam - (b - self.overlap)) / (2 * self.overlap))

    def bump(self, k: int, lam):
        if not 0 <= k < self.count:
            raise KeyError(f"bump index {k} outside [0, {self.count})")
        lam = np.asarray(lam, dtype=float)
        lo, hi = self.interval
        inside = (lam >= lo) & (lam <= hi)
        left = 1.0 if k == 0 else self._rise(lam, self.breaks[k])
        right = 0.0 if k == self.count - 1 else self._rise(lam, self.breaks[k + 1])
        return np.where(inside, left - right, 0.0)

    def support(self, k: int) -> tuple[float, float]:
        lo, hi = self.interval
        a = lo if k == 0 else self.breaks[k] - self.overlap
        b = hi if k == self.count - 1 else self.breaks[k + 1] + self.overlap
        return (a, b)

    def total(self, lam):
        return sum(self.bump(k, lam) for k in range(self.count))


def build_second_frequency_family(
    j: int, alpha: float = 1 / 8, separation: float = 1.0
) -> SecondFrequencyFamily:
    if not 0 < alpha < 0.2:
        raise ValueError("alpha must lie in (0, 1/5)")
    if not 0 < separation <= 2:
        raise ValueError("separation must lie in (0, 2]")
    if j < -1:
        raise ValueError("octave index must be >= -1")
    count = max(1, int(math.ceil(separation ** (-alpha) - 1e-9)))
    lo = 0.0 if j == -1 else 2.0 ** (j - 1)
    hi = 2.0 ** (j + 1)
    breaks = np.linspace(lo, hi, count + 1)
    width = (hi - lo) / count
    return SecondFrequencyFamily(
        j=int(j),
        alpha=float(alpha),
        separation=float(separation),
        breaks=breaks,
        overlap=width / 4,
    )
