"""Compiled inner loops for oscillatory sums over (x, omega).

Every kernel evaluates the phase ``v(x, w) = sign * u(x, d)`` with
``d = omega_sign * w`` on the fly, where ``u`` is the perturbed plane-wave
phase (see :mod:`roughfio.phase`).  Symbols that depend on the phase only
through ``grad u`` are also evaluated here, selected by an integer code:

====  ==========================  ==========
code  symbol                      components
====  ==========================  ==========
0     1                           1
1     |grad u|   (inverse lapse)  1
2     |grad u| - 1                1
3     N = grad u / |grad u|       3
4     grad u  (= N / a)           3
5     (grad u, |grad u|)          4
6     a = 1 / |grad u|            1
====  ==========================  ==========
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

SYMBOL_COMPONENTS = {0: 1, 1: 1, 2: 1, 3: 3, 4: 3, 5: 4, 6: 1}


@njit(cache=True)
def _cutoff_and_slope(r):
    """chi(r) and chi'(r) for r >= 0 (chi = S(2 - r))."""
    y = 2.0 - r
    if y <= 0.0:
        return 0.0, 0.0
    if y >= 1.0:
        return 1.0, 0.0
    a = np.exp(-1.0 / y)
    b = np.exp(-1.0 / (1.0 - y))
    d = a + b
    a1 = a / (y * y)
    b1 = -b / ((1.0 - y) * (1.0 - y))
    s1 = (a1 * b - a * b1) / (d * d)
    return a / d, -s1


@njit(cache=True)
def _phase_and_grad(x0, x1, x2, d0, d1, d2, c, c1r, eps, amps, mfreq, qfreq, offs, grad):
    """Return u and write grad u into ``grad``; ``c1r = chi'(r)/r``."""
    s = x0 * d0 + x1 * d1 + x2 * d2
    grad[0] = d0
    grad[1] = d1
    grad[2] = d2
    if c == 0.0 and c1r == 0.0:
        return s
    g = 0.0
    gs = 0.0
    for k in range(amps.shape[0]):
        arg = mfreq[k] * s + qfreq[k, 0] * d0 + qfreq[k, 1] * d1 + qfreq[k, 2] * d2 + offs[k]
        g += amps[k] * np.cos(arg)
        gs -= amps[k] * mfreq[k] * np.sin(arg)
    grad[0] += eps * (g * c1r * x0 + c * gs * d0)
    grad[1] += eps * (g * c1r * x1 + c * gs * d1)
    grad[2] += eps * (g * c1r * x2 + c * gs * d2)
    return s + eps * c * g


@njit(cache=True)
def _symbol(code, grad, out):
    if code == 0:
        out[0] = 1.0
        return
    nrm = np.sqrt(grad[0] ** 2 + grad[1] ** 2 + grad[2] ** 2)
    if code == 1:
        out[0] = nrm
    elif code == 2:
        out[0] = nrm - 1.0
    elif code == 3:
        out[0] = grad[0] / nrm
        out[1] = grad[1] / nrm
        out[2] = grad[2] / nrm
    elif code == 4:
        out[0] = grad[0]
        out[1] = grad[1]
        out[2] = grad[2]
    elif code == 5:
        out[0] = grad[0]
        out[1] = grad[1]
        out[2] = grad[2]
        out[3] = nrm
    else:
        out[0] = 1.0 / nrm


@njit(cache=True)
def _cutoffs(points, eps):
    n = points.shape[0]
    cs = np.zeros(n)
    c1r = np.zeros(n)
    if eps == 0.0:
        return cs, c1r
    for i in range(n):
        r = np.sqrt(points[i, 0] ** 2 + points[i, 1] ** 2 + points[i, 2] ** 2)
        c, c1 = _cutoff_and_slope(r)
        cs[i] = c
        if r > 0.0:
            c1r[i] = c1 / r
    return cs, c1r


@njit(cache=True)
def _lagrange(tau, p, bary, weights):
    """Lagrange weights at offset ``tau`` in [p/2-1, p/2) for nodes 0..p-1."""
    ell = 1.0
    hit = -1
    for t in range(p):
        diff = tau - t
        if diff == 0.0:
            hit = t
        ell *= diff
    if hit >= 0:
        for t in range(p):
            weights[t] = 0.0
        weights[hit] = 1.0
        return
    for t in range(p):
        weights[t] = ell * bary[t] / (tau - t)


@njit(parallel=True, cache=True)
def interp_forward(points, dirs, active, table, s0, ds, bary, phase_sign, eps,
                   amps, mfreq, qfreq, offs, code, ncomp):
    """``out[x, c] = sum_w b_c(x, w) * T_w(v(x, w))`` with Lagrange interpolation."""
    nx = points.shape[0]
    p = bary.shape[0]
    half = p // 2 - 1
    out = np.zeros((nx, ncomp), dtype=np.complex128)
    cs, c1r = _cutoffs(points, eps)
    for i in prange(nx):
        grad = np.empty(3)
        sym = np.empty(4)
        lw = np.empty(p)
        x0 = points[i, 0]
        x1 = points[i, 1]
        x2 = points[i, 2]
        acc = np.zeros(ncomp, dtype=np.complex128)
        for ia in range(active.shape[0]):
            iw = active[ia]
            u = _phase_and_grad(x0, x1, x2, dirs[iw, 0], dirs[iw, 1], dirs[iw, 2],
                                cs[i], c1r[i], eps, amps, mfreq, qfreq, offs, grad)
            v = phase_sign * u
            tau = (v - s0) / ds
            fl = np.floor(tau)
            m0 = int(fl) - half
            _lagrange(tau - fl + half, p, bary, lw)
            val = 0.0j
            for t in range(p):
                val += lw[t] * table[ia, m0 + t]
            _symbol(code, grad, sym)
            for c in range(ncomp):
                acc[c] += sym[c] * val
        for c in range(ncomp):
            out[i, c] = acc[c]
    return out


@njit(parallel=True, cache=True)
def interp_adjoint(points, weights, g, dirs, active, ns, s0, ds, bary, phase_sign, eps,
                   amps, mfreq, qfreq, offs, code, ncomp):
    """Exact transpose of :func:`interp_forward` (spread into the table)."""
    nx = points.shape[0]
    p = bary.shape[0]
    half = p // 2 - 1
    nact = active.shape[0]
    out = np.zeros((nact, ns), dtype=np.complex128)
    cs, c1r = _cutoffs(points, eps)
    for ia in prange(nact):
        grad = np.empty(3)
        sym = np.empty(4)
        lw = np.empty(p)
        iw = active[ia]
        d0 = dirs[iw, 0]
        d1 = dirs[iw, 1]
        d2 = dirs[iw, 2]
        for i in range(nx):
            u = _phase_and_grad(points[i, 0], points[i, 1], points[i, 2], d0, d1, d2,
                                cs[i], c1r[i], eps, amps, mfreq, qfreq, offs, grad)
            v = phase_sign * u
            _symbol(code, grad, sym)
            val = 0.0j
            for c in range(ncomp):
                val += sym[c] * g[i, c]
            if val == 0.0:
                continue
            val *= weights[i]
            tau = (v - s0) / ds
            fl = np.floor(tau)
            m0 = int(fl) - half
            _lagrange(tau - fl + half, p, bary, lw)
            for t in range(p):
                out[ia, m0 + t] += lw[t] * val
    return out


@njit(parallel=True, cache=True)
def direct_forward(points, dirs, active, lam, coef, phase_sign, eps,
                   amps, mfreq, qfreq, offs, code, ncomp):
    """Reference sum ``sum_{lam, w} b(x, w) exp(i lam v(x, w)) coef[lam, w]``."""
    nx = points.shape[0]
    nl = lam.shape[0]
    out = np.zeros((nx, ncomp), dtype=np.complex128)
    cs, c1r = _cutoffs(points, eps)
    for i in prange(nx):
        grad = np.empty(3)
        sym = np.empty(4)
        acc = np.zeros(ncomp, dtype=np.complex128)
        for ia in range(active.shape[0]):
            iw = active[ia]
            u = _phase_and_grad(points[i, 0], points[i, 1], points[i, 2],
                                dirs[iw, 0], dirs[iw, 1], dirs[iw, 2],
                                cs[i], c1r[i], eps, amps, mfreq, qfreq, offs, grad)
            v = phase_sign * u
            val = 0.0j
            for il in range(nl):
                val += coef[il, iw] * np.exp(1j * lam[il] * v)
            _symbol(code, grad, sym)
            for c in range(ncomp):
                acc[c] += sym[c] * val
        for c in range(ncomp):
            out[i, c] = acc[c]
    return out


@njit(parallel=True, cache=True)
def direct_adjoint(points, weights, g, dirs, active, lam, phase_sign, eps,
                   amps, mfreq, qfreq, offs, code, ncomp, nw):
    """Reference transpose: ``sum_x h_x conj(b) exp(-i lam v) g(x)``."""
    nx = points.shape[0]
    nl = lam.shape[0]
    out = np.zeros((nl, nw), dtype=np.complex128)
    cs, c1r = _cutoffs(points, eps)
    for ia in prange(active.shape[0]):
        grad = np.empty(3)
        sym = np.empty(4)
        iw = active[ia]
        for i in range(nx):
            u = _phase_and_grad(points[i, 0], points[i, 1], points[i, 2],
                                dirs[iw, 0], dirs[iw, 1], dirs[iw, 2],
                                cs[i], c1r[i], eps, amps, mfreq, qfreq, offs, grad)
            v = phase_sign * u
            _symbol(code, grad, sym)
            val = 0.0j
            for c in range(ncomp):
                val += sym[c] * g[i, c]
            val *= weights[i]
            for il in range(nl):
                out[il, iw] += val * np.exp(-1j * lam[il] * v)
    return out


def barycentric_weights(p: int) -> np.ndarray:
    """Barycentric weights of the equispaced nodes ``0, ..., p-1``."""
    from math import factorial

    return np.array(
        [(-1.0) ** (p - 1 - t) / (factorial(t) * factorial(p - 1 - t)) for t in range(p)]
    )


@njit(cache=True)
def _interp_table(t, table, t_step, bary, lw):
    """Lagrange interpolation of a table sampled at ``k * t_step``, ``k >= 0``,
    extended by conjugate symmetry to negative ``t``."""
    p = bary.shape[0]
    half = p // 2 - 1
    neg = t < 0.0
    a = -t if neg else t
    tau = a / t_step
    fl = np.floor(tau)
    m0 = int(fl) - half
    _lagrange(tau - fl + half, p, bary, lw)
    val = 0.0j
    for q in range(p):
        m = m0 + q
        if m < 0:
            val += lw[q] * np.conj(table[-m])
        elif m < table.shape[0]:
            val += lw[q] * table[m]
    if neg:
        return np.conj(val)
    return val


@njit(parallel=True, cache=True)
def kernel_rows(x, ys, dirs, cap_weights, table, t_step, bary, scale, eps,
                amps, mfreq, qfreq, offs):
    """``K(x, y) = sum_w cap_w Psi(scale * (u(x, w) - u(y, w)))`` for every ``y``."""
    ny = ys.shape[0]
    nw = dirs.shape[0]
    out = np.zeros(ny, dtype=np.complex128)
    xs = np.empty((1, 3))
    xs[0, :] = x
    cx, c1x = _cutoffs(xs, eps)
    ux = np.empty(nw)
    grad = np.empty(3)
    for iw in range(nw):
        ux[iw] = _phase_and_grad(x[0], x[1], x[2], dirs[iw, 0], dirs[iw, 1], dirs[iw, 2],
                                 cx[0], c1x[0], eps, amps, mfreq, qfreq, offs, grad)
    cy, c1y = _cutoffs(ys, eps)
    p = bary.shape[0]
    for i in prange(ny):
        g = np.empty(3)
        lw = np.empty(p)
        acc = 0.0j
        for iw in range(nw):
            uy = _phase_and_grad(ys[i, 0], ys[i, 1], ys[i, 2], dirs[iw, 0], dirs[iw, 1],
                                 dirs[iw, 2], cy[i], c1y[i], eps, amps, mfreq, qfreq, offs, g)
            acc += cap_weights[iw] * _interp_table(scale * (ux[iw] - uy), table, t_step, bary, lw)
        out[i] = acc
    return out
