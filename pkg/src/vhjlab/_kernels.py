"""Compiled 1D kernels for the explicit march.

Same stencil as :mod:`vhjlab.discrete_ops` on a uniform interval grid, fused
into a single pass. The numpy operators stay the reference; the test suite
checks the two agree to round-off.
"""

from __future__ import annotations

import numpy as np
from numba import njit

EPS0 = 1e-12


@njit(cache=True, inline="always")
def _phi(s, p):
    if p == 2.0:
        return s
    return abs(s) ** (p - 2.0) * s


@njit(cache=True, inline="always")
def _hpow(m, q):
    if q == 2.0:
        return m * m
    if q == 3.0:
        return m * m * m
    return m ** q


@njit(cache=True)
def rates_1d(u, h, p, q, f, wall, out):
    """Fill ``out`` with ``u_t`` (pde part plus wall flux); return the largest |D u|."""
    n = u.shape[0]
    G = 0.0
    half = 0.5 * h
    d_prev = 0.0
    for i in range(n):
        if i < n - 1:
            dp = (u[i + 1] - u[i]) / h
        else:
            dp = 0.0
        if i == 0:
            lap = _phi(dp, p) / half
            m = max(-dp, 0.0)
        elif i == n - 1:
            lap = -_phi(d_prev, p) / half
            m = max(d_prev, 0.0)
        else:
            lap = (_phi(dp, p) - _phi(d_prev, p)) / h
            m = max(max(d_prev, 0.0), max(-dp, 0.0))
        out[i] = lap - _hpow(m, q) + f[i] + wall[i]
        if i < n - 1:
            a = abs(dp)
            if a > G:
                G = a
        d_prev = dp
    return G


@njit(cache=True, inline="always")
def cfl_step(G, h, dim, p, q, sigma, cap, floor):
    G = min(G, cap)
    if p == 2.0:
        Gd = 1.0
    else:
        Gd = max(G, 1.0)
    diff = h * h / (2.0 * dim * (p - 1.0) * Gd ** (p - 2.0) + EPS0)
    hj = h / (q * G ** (q - 1.0) + EPS0)
    return max(sigma * min(diff, hj), floor)


@njit(cache=True)
def march_1d(u, t, t_out, h, p, q, f, gl, gr, wall, sigma, cap, floor,
             max_steps, dts, grads, dets, excess, tol):
    """Advance ``u`` in place up to ``t_out`` with static data.

    Returns ``(t, steps, status)``; status 0 reached ``t_out``, 1 non-finite,
    2 diagnostic buffers full (call again to continue).
    """
    n = u.shape[0]
    r = np.empty(n)
    k = 0
    while t < t_out:
        if k >= max_steps or k >= dts.shape[0]:
            return t, k, 2
        G = rates_1d(u, h, p, q, f, wall, r)
        dt = cfl_step(G, h, 1.0, p, q, sigma, cap, floor)
        if t + dt >= t_out * (1.0 - 1e-13) or t_out - (t + dt) < 1e-3 * dt:
            dt = t_out - t
            t_next = t_out
        else:
            t_next = t + dt
        ok = True
        for i in range(n):
            v = u[i] + dt * r[i]
            if not np.isfinite(v):
                ok = False
            u[i] = v
        u[0] = min(gl, u[0])
        u[n - 1] = min(gr, u[n - 1])
        if not ok:
            return t_next, k, 1
        nd = 0
        if gl - u[0] > tol:
            nd += 1
        if gr - u[n - 1] > tol:
            nd += 1
        dts[k] = dt
        grads[k] = G
        dets[k] = nd
        excess[k] = max(u[0] - gl, u[n - 1] - gr)
        t = t_next
        k += 1
    return t, k, 0


@njit(cache=False)
def march_1d_timed(u, t, t_out, h, p, q, f, gfun, xl, xr, wall, sigma, cap, floor,
                   max_steps, dts, grads, dets, excess, tol):
    """:func:`march_1d` with boundary data ``gfun(x, 0, t)`` evaluated at the new time."""
    n = u.shape[0]
    r = np.empty(n)
    k = 0
    while t < t_out:
        if k >= max_steps or k >= dts.shape[0]:
            return t, k, 2
        G = rates_1d(u, h, p, q, f, wall, r)
        dt = cfl_step(G, h, 1.0, p, q, sigma, cap, floor)
        if t + dt >= t_out * (1.0 - 1e-13) or t_out - (t + dt) < 1e-3 * dt:
            dt = t_out - t
            t_next = t_out
        else:
            t_next = t + dt
        gl = float(gfun(xl, 0.0, t_next))
        gr = float(gfun(xr, 0.0, t_next))
        ok = True
        for i in range(n):
            v = u[i] + dt * r[i]
            if not np.isfinite(v):
                ok = False
            u[i] = v
        u[0] = min(gl, u[0])
        u[n - 1] = min(gr, u[n - 1])
        if not ok:
            return t_next, k, 1
        nd = 0
        if gl - u[0] > tol:
            nd += 1
        if gr - u[n - 1] > tol:
            nd += 1
        dts[k] = dt
        grads[k] = G
        dets[k] = nd
        excess[k] = max(u[0] - gl, u[n - 1] - gr)
        t = t_next
        k += 1
    return t, k, 0


@njit(cache=True)
def march_pair_1d(u1, u2, t, t_out, h, p, q, f1, f2, g1l, g1r, g2l, g2r, wall,
                  sigma, cap, floor, max_steps):
    """Advance two states with one common step, the smaller of their CFL steps."""
    n = u1.shape[0]
    r1 = np.empty(n)
    r2 = np.empty(n)
    k = 0
    while t < t_out:
        if k >= max_steps:
            return t, k, 2
        G = max(rates_1d(u1, h, p, q, f1, wall, r1), rates_1d(u2, h, p, q, f2, wall, r2))
        dt = cfl_step(G, h, 1.0, p, q, sigma, cap, floor)
        if t + dt >= t_out * (1.0 - 1e-13) or t_out - (t + dt) < 1e-3 * dt:
            dt = t_out - t
            t_next = t_out
        else:
            t_next = t + dt
        ok = True
        for i in range(n):
            a = u1[i] + dt * r1[i]
            b = u2[i] + dt * r2[i]
            if not (np.isfinite(a) and np.isfinite(b)):
                ok = False
            u1[i] = a
            u2[i] = b
        u1[0] = min(g1l, u1[0])
        u1[n - 1] = min(g1r, u1[n - 1])
        u2[0] = min(g2l, u2[0])
        u2[n - 1] = min(g2r, u2[n - 1])
        t = t_next
        k += 1
        if not ok:
            return t, k, 1
    return t, k, 0
