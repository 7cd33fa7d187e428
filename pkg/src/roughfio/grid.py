"""Quadrature grids in polar frequency coordinates and on physical space.

Frequency space is sampled as ``xi = lam * omega`` with log-spaced radial
nodes and a Fibonacci layout on the unit sphere.  Physical space is either a
cell-centred Cartesian lattice or a spherical (ball) grid.  The module also
provides the plain L2 norms and the mixed norms over level slabs of a phase.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import fft as sp_fft

__all__ = [
    "fibonacci_sphere",
    "geodesic_distance",
    "tangent_frame",
    "PolarFrequencyGrid",
    "SpatialGrid",
    "build_polar_grid",
    "build_lattice_grid",
    "build_ball_grid",
    "polar_l2_norm",
    "spatial_l2_norm",
    "spectral_gradient",
    "mixed_norm",
    "grid_spec",
    "save_array",
    "load_array",
]

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def fibonacci_sphere(n: int) -> np.ndarray:
    """Quasi-uniform points on the unit sphere (equal-area z spacing).

    Parameters
    ----------
    n : int
        Number of points.

    Returns
    -------
    ndarray, shape (n, 3)
    """
    if n < 1:
        raise ValueError("need at least one point")
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = _GOLDEN_ANGLE * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


def geodesic_distance(a, b):
    """Great-circle distance between unit vectors (broadcasting on the last axis)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.arctan2(cross, dot)


def tangent_frame(v):
    """Deterministic orthonormal pair spanning the plane orthogonal to ``v``.

    Gram-Schmidt of the first coordinate axis against ``v``; the second axis
    is used instead when ``v`` is nearly parallel to the first.  The second
    vector completes a right-handed frame ``(e1, e2, v)``.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    seed = np.zeros_like(v)
    use_y = np.abs(v[..., 0]) > 0.9
    seed[..., 0] = np.where(use_y, 0.0, 1.0)
    seed[..., 1] = np.where(use_y, 1.0, 0.0)
    e1 = seed - np.sum(seed * v, axis=-1, keepdims=True) * v
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(v, e1)
    return e1, e2


# ---------------------------------------------------------------------------
# frequency grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolarFrequencyGrid:
    """Product quadrature for ``int g(lam omega) lam^2 dlam domega``."""

    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    angular_nodes: np.ndarray
    angular_weights: np.ndarray
    j_range: tuple[int, int]
    radial_per_octave: int

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.radial_nodes), len(self.angular_nodes))

    @property
    def measure(self) -> np.ndarray:
        """Full quadrature weight ``lam^2 w_lam w_omega`` per node."""
        lam = self.radial_nodes
        return np.outer(lam**2 * self.radial_weights, self.angular_weights)

    def points(self) -> np.ndarray:
        """Frequency vectors ``lam * omega``, shape ``(n_lam, n_omega, 3)``."""
        return self.radial_nodes[:, None, None] * self.angular_nodes[None, :, :]

    def evaluate(self, func) -> np.ndarray:
        """Sample ``func(xi)`` (xi of shape ``(..., 3)``) on the grid."""
        return np.asarray(func(self.points()))

    def spec(self) -> dict:
        return {
            "j_min": int(self.j_range[0]),
            "j_max": int(self.j_range[1]),
            "radial_per_octave": int(self.radial_per_octave),
            "angular_count": int(len(self.angular_nodes)),
        }

    def refined(self) -> "PolarFrequencyGrid":
        """The same octave range with twice the radial and angular counts."""
        return build_polar_grid(
            self.j_range[0],
            self.j_range[1],
            2 * self.radial_per_octave,
            2 * len(self.angular_nodes),
        )


def build_polar_grid(
    j_min: int, j_max: int, radial_per_octave: int, angular_count: int
) -> PolarFrequencyGrid:
    """Log-spaced radial nodes on ``[2^(j_min-1), 2^(j_max+1)]`` times a
    Fibonacci sphere.

    The radial rule is the composite trapezoid rule in ``s = log lam``,
    i.e. ``w_lam = lam * ds`` with halved end weights; the ``lam^2`` factor of
    the measure is kept separate.

    Examples
    --------
    >>> g = build_polar_grid(0, 3, 8, 64)
    >>> g.shape
    (32, 64)
    """
    if radial_per_octave <= 0 or angular_count <= 0:
        raise ValueError("node counts must be positive")
    if j_min > j_max:
        raise ValueError("j_min must not exceed j_max")
    if radial_per_octave < 4:
        raise ValueError("radial_per_octave must be at least 4")
    if angular_count < 16:
        raise ValueError("angular_count must be at least 16")
    n_rad = (j_max - j_min + 1) * radial_per_octave
    s = np.linspace((j_min - 1) * np.log(2.0), (j_max + 1) * np.log(2.0), n_rad)
    ds = s[1] - s[0]
    lam = np.exp(s)
    w = lam * ds
    w[0] *= 0.5
    w[-1] *= 0.5
    omega = fibonacci_sphere(angular_count)
    w_omega = np.full(angular_count, 4.0 * np.pi / angular_count)
    return PolarFrequencyGrid(
        radial_nodes=lam,
        radial_weights=w,
        angular_nodes=omega,
        angular_weights=w_omega,
        j_range=(int(j_min), int(j_max)),
        radial_per_octave=int(radial_per_octave),
    )


# ---------------------------------------------------------------------------
# spatial grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Weighted point cloud in R^3.

    Lattice grids also carry ``shape``, ``spacing`` and ``half_width`` so
    that spectral operations (FFT gradients, frequency projections) apply.
    """

    points: np.ndarray
    weights: np.ndarray
    bounding_radius: float = 2.0
    shape: tuple[int, int, int] | None = None
    spacing: float | None = None
    half_width: float | None = None

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")
        if len(self.points) != len(self.weights):
            raise ValueError("one weight per point required")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_lattice(self) -> bool:
        return self.shape is not None

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    def to_cube(self, values):
        """Reshape lattice values to ``shape`` (+ trailing axes)."""
        if not self.is_lattice:
            raise ValueError("grid is not a lattice")
        values = np.asarray(values)
        return values.reshape(self.shape + values.shape[1:])

    def wavenumbers(self):
        """Angular wavenumbers of the lattice FFT, as three 1-D arrays."""
        if not self.is_lattice:
            raise ValueError("grid is not a lattice")
        return [2 * np.pi * sp_fft.fftfreq(n, d=self.spacing) for n in self.shape]

    def spec(self) -> dict:
        if self.is_lattice:
            return {"L": float(self.half_width), "n": int(self.shape[0])}
        return {"points": int(len(self.points)), "volume": self.volume}


def spectral_gradient(values, grid: SpatialGrid) -> np.ndarray:
    """Gradient of lattice samples by FFT, shape ``(n_points, 3)``.

    Real input gives a real gradient.
    """
    kx, ky, kz = grid.wavenumbers()
    values = np.asarray(values)
    spec = sp_fft.fftn(grid.to_cube(values))
    out = []
    for k, shape in ((kx, (-1, 1, 1)), (ky, (1, -1, 1)), (kz, (1, 1, -1))):
        out.append(sp_fft.ifftn(1j * k.reshape(shape) * spec).ravel())
    grad = np.stack(out, axis=-1)
    return grad.real if np.isrealobj(values) else grad


def build_lattice_grid(half_width: float = 4.0, n: int = 32) -> SpatialGrid:
    """Cell-centred ``n^3`` lattice on ``[-L, L]^3`` with weights ``h^3``."""
    if n <= 0 or half_width <= 0:
        raise ValueError("lattice size and half width must be positive")
    h = 2.0 * half_width / n
    axis = -half_width + h * (np.arange(n) + 0.5)
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
    return SpatialGrid(
        points=pts,
        weights=np.full(len(pts), h**3),
        shape=(n, n, n),
        spacing=h,
        half_width=float(half_width),
    )


def build_ball_grid(radius: float, n_radial: int = 16, n_angular: int = 128) -> SpatialGrid:
    """Gauss-Legendre shells times a Fibonacci sphere inside a ball.

    The radial weights integrate ``r^2 dr`` exactly for polynomials of
    degree up to ``2 n_radial - 3``, so the weights sum to the ball volume.
    """
    if radius <= 0 or n_radial <= 0 or n_angular <= 0:
        raise ValueError("radius and counts must be positive")
    t, wt = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * radius * (t + 1.0)
    wr = 0.5 * radius * wt * r**2
    omega = fibonacci_sphere(n_angular)
    pts = (r[:, None, None] * omega[None, :, :]).reshape(-1, 3)
    w = np.outer(wr, np.full(n_angular, 4 * np.pi / n_angular)).ravel()
    return SpatialGrid(points=pts, weights=w, bounding_radius=float(radius))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def polar_l2_norm(f, g: PolarFrequencyGrid) -> float:
    """``sqrt(sum |f|^2 lam^2 w_lam w_omega)``."""
    f = np.asarray(f)
    if f.shape != g.shape:
        raise ValueError(f"density shape {f.shape} does not match grid {g.shape}")
    return float(np.sqrt(np.sum(np.abs(f) ** 2 * g.measure)))


def spatial_l2_norm(F, g: SpatialGrid) -> float:
    """Weighted L2 norm; trailing axes (vector fields) are summed pointwise."""
    F = np.asarray(F)
    if F.shape[0] != len(g):
        raise ValueError(f"field length {F.shape[0]} does not match grid {len(g)}")
    sq = np.abs(F.reshape(len(g), -1)) ** 2
    return float(np.sqrt(np.sum(sq.sum(axis=1) * g.weights)))


def mixed_norm(F, phase, omega, p, q, slab_width=None, grid: SpatialGrid | None = None):
    """Mixed norm ``L^p_u L^q(P_u)`` along the level sets of ``u(., omega)``.

    Points are binned into slabs ``u in [m D, (m+1) D)``.  For ``q = 2`` the
    squared norm on a level surface is approximated by
    ``sum_slab |F|^2 h_x / (a D)``, which is the coarea formula read
    backwards; for ``q = inf`` it is the slab maximum.  The outer norm uses
    ``du = D``.

    Parameters
    ----------
    F : array, one value per grid point
    phase : object with ``value(x, omega)`` and ``lapse(x, omega)``
    omega : unit vector
    p, q : 2 or ``inf``
    slab_width : float, optional
        Defaults to twice the lattice spacing.
    grid : SpatialGrid
    """
    if grid is None:
        raise ValueError("a spatial grid is required")
    if len(grid) == 0:
        raise ValueError("empty grid")
    for name, val in (("p", p), ("q", q)):
        if val not in (2, np.inf):
            raise ValueError(f"{name} must be 2 or inf")
    if slab_width is None:
        if grid.spacing is None:
            raise ValueError("slab_width is required for non-lattice grids")
        slab_width = 2.0 * grid.spacing
    if slab_width <= 0:
        raise ValueError("slab_width must be positive")
    F = np.abs(np.asarray(F)).reshape(len(grid), -1)
    F = np.sqrt((F**2).sum(axis=1))
    omega = np.asarray(omega, dtype=float)
    u = phase.value(grid.points, omega)
    a = phase.lapse(grid.points, omega)
    m = np.floor(u / slab_width).astype(np.int64)
    labels, inv = np.unique(m, return_inverse=True)
    if q == 2:
        per_slab = np.bincount(inv, weights=F**2 * grid.weights / (a * slab_width))
        per_slab = np.sqrt(per_slab)
    else:
        per_slab = np.zeros(len(labels))
        np.maximum.at(per_slab, inv, F)
    if p == 2:
        return float(np.sqrt(np.sum(per_slab**2) * slab_width))
    return float(per_slab.max())


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def grid_spec(fgrid: PolarFrequencyGrid, sgrid: SpatialGrid | None = None) -> dict:
    """Structured description from which the grids can be rebuilt."""
    spec = fgrid.spec()
    if sgrid is not None:
        spec.update(sgrid.spec())
    return spec


def _spec_hash(spec: dict) -> str:
    text = json.dumps(spec, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def save_array(path, values, spec: dict) -> None:
    """Write ``values`` as raw little-endian bytes after a one-line JSON header."""
    values = np.ascontiguousarray(values)
    dtype = values.dtype.newbyteorder("<")
    header = {
        "shape": list(values.shape),
        "dtype": dtype.str,
        "grid_hash": _spec_hash(spec),
        "grid": spec,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        fh.write(values.astype(dtype).tobytes())


def load_array(path, spec: dict | None = None):
    """Read an array written by :func:`save_array`.

    If ``spec`` is given, the stored grid hash must match it.
    """
    raw = Path(path).read_bytes()
    line, _, body = raw.partition(b"\n")
    header = json.loads(line)
    if spec is not None and header["grid_hash"] != _spec_hash(spec):
        raise ValueError("array was written for a different grid")
    arr = np.frombuffer(body, dtype=np.dtype(header["dtype"]))
    return arr.reshape(header["shape"]).copy(), header
