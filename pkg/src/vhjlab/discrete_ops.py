"""Pointwise difference operators for the viscous Hamilton-Jacobi operator.

Everything here is vectorised over the nodes of a :class:`~vhjlab.domain.Grid`.
The Hamiltonian ``|Du|^q`` uses Godunov upwinding; the p-Laplacian is written
in flux form, ``(phi(D+u) - phi(D-u)) / h`` with ``phi(s) = |s|^(p-2) s``, which
keeps the scheme monotone under the CFL bound of :mod:`vhjlab.parabolic`.

At a boundary node the missing outward side is closed by a half cell with zero
flux; the generalized-Dirichlet modules add the wall flux on top of that (see
:func:`wall_drive`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .domain import Grid


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(f"field has {v.shape} values for {self.grid.size} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class StencilSample:
    """Differences at every node, axis first: arrays of shape ``(dim, N)``.

    Absent one-sided differences (outward side of a boundary node) are nan.
    ``tangential_minus/plus`` hold the squared tangential gradient on each face
    (zero in 1D).
    """

    dminus: np.ndarray
    dplus: np.ndarray
    dcentral: np.ndarray
    d2: np.ndarray
    cross: np.ndarray | None
    h_minus: np.ndarray
    h_plus: np.ndarray
    tangential_minus: np.ndarray
    tangential_plus: np.ndarray

    def at(self, i: int) -> "StencilSample":
        sl = (slice(None), slice(i, i + 1))
        return StencilSample(
            self.dminus[sl], self.dplus[sl], self.dcentral[sl], self.d2[sl],
            None if self.cross is None else self.cross[i:i + 1],
            self.h_minus[sl], self.h_plus[sl],
            self.tangential_minus[sl], self.tangential_plus[sl])


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, Field) else np.asarray(u, dtype=float)


def stencil(grid: Grid, u) -> StencilSample:
    u = _values(u)
    nb, hs = grid.neighbors, grid.spacing
    has = nb >= 0
    safe = np.where(has, nb, np.arange(grid.size))
    um = u[safe[:, 0]]
    up = u[safe[:, 1]]
    hm, hp = hs[:, 0], hs[:, 1]
    with np.errstate(invalid="ignore"):
        dm = np.where(has[:, 0], (u - um) / hm, np.nan)
        dp = np.where(has[:, 1], (up - u) / hp, np.nan)
        both = has[:, 0] & has[:, 1]
        dc = np.where(both, (up - um) / (hm + hp),
                      np.where(has[:, 0], dm, np.where(has[:, 1], dp, 0.0)))
        d2 = np.where(both, 2.0 * (dp - dm) / (hm + hp), 0.0)
    # one-sided second differences are not used by any scheme; borrow from the inward node
    for k in range(grid.dim):
        missing = ~both[k]
        if missing.any():
            inward = np.where(has[k, 0], nb[k, 0], nb[k, 1])[missing]
            d2[k, missing] = np.where(both[k, inward], d2[k, inward], 0.0)

    tm = np.zeros_like(dc)
    tp = np.zeros_like(dc)
    cross = None
    if grid.dim == 2:
        for k in range(2):
            j = 1 - k
            tm[k] = np.where(has[k, 0], (0.5 * (dc[j] + dc[j, safe[k, 0]])) ** 2, 0.0)
            tp[k] = np.where(has[k, 1], (0.5 * (dc[j] + dc[j, safe[k, 1]])) ** 2, 0.0)
        # centred difference (in y) of the centred x-derivative
        g = dc[0]
        hy = np.where(both[1], hm[1] + hp[1], np.nan)
        cross = np.where(both[1], (g[safe[1, 1]] - g[safe[1, 0]]) / hy, 0.0)
    return StencilSample(dm, dp, dc, d2, cross, hm, hp, tm, tp)


def godunov_components(s: StencilSample) -> np.ndarray:
    """Per-axis upwind magnitude ``max(max(D-,0), max(-D+,0))``; absent sides drop out."""
    a = np.where(np.isnan(s.dminus), 0.0, np.maximum(s.dminus, 0.0))
    b = np.where(np.isnan(s.dplus), 0.0, np.maximum(-s.dplus, 0.0))
    return np.maximum(a, b)


def upwind_gradient(s: StencilSample) -> np.ndarray:
    m = godunov_components(s)
    return np.sqrt((m * m).sum(axis=0))


def hamiltonian(s: StencilSample, q: float) -> np.ndarray:
    return upwind_gradient(s) ** q


def _flux(dv, tang, p):
    if p == 2:
        return dv
    return (dv * dv + tang) ** (0.5 * (p - 2)) * dv


def _flux_slope(dv, tang, p):
    """d(flux)/d(dv) with the tangential part frozen."""
    if p == 2:
        return np.ones_like(dv)
    m2 = dv * dv + tang
    with np.errstate(divide="ignore", invalid="ignore"):
        out = m2 ** (0.5 * (p - 4)) * ((p - 1) * dv * dv + tang)
    return np.where(m2 > 0, out, 0.0)


def p_laplacian(s: StencilSample, p: float) -> np.ndarray:
    """Flux-form ``div(|Du|^(p-2) Du)``; an absent side is a zero-flux half cell."""
    miss_m = np.isnan(s.dminus)
    miss_p = np.isnan(s.dplus)
    fm = np.where(miss_m, 0.0, _flux(np.nan_to_num(s.dminus), s.tangential_minus, p))
    fp = np.where(miss_p, 0.0, _flux(np.nan_to_num(s.dplus), s.tangential_plus, p))
    hm = np.where(miss_m, 0.0, np.nan_to_num(s.h_minus))
    hp = np.where(miss_p, 0.0, np.nan_to_num(s.h_plus))
    width = 0.5 * (hm + hp)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_axis = np.where(width > 0, (fp - fm) / width, 0.0)
    return per_axis.sum(axis=0)


def p_laplacian_expanded(s: StencilSample, p: float) -> np.ndarray:
    """Non-divergence form ``|Du|^(p-2) (Tr D2u + (p-2) <D2u n, n>)`` from centred differences.

    Reference evaluator for consistency checks; not monotone, so the solvers do
    not use it.
    """
    g = s.dcentral
    mod = np.sqrt((g * g).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(mod > 0, g / mod, 0.0)
    trace = s.d2.sum(axis=0)
    if s.cross is None:
        quad = s.d2[0] * n[0] ** 2
    else:
        quad = s.d2[0] * n[0] ** 2 + 2 * s.cross * n[0] * n[1] + s.d2[1] * n[1] ** 2
    pref = mod ** (p - 2) if p != 2 else np.ones_like(mod)
    return pref * (trace + (p - 2) * quad)


def residual(grid: Grid, u, p: float, q: float, f) -> np.ndarray:
    """``-div(|Du|^(p-2)Du) + |Du|^q - f`` at every node, so that ``u_t = -residual``."""
    s = stencil(grid, u)
    return -p_laplacian(s, p) + hamiltonian(s, q) - np.broadcast_to(f, (grid.size,))


def spatial_residual(field: Field, node: int, p: float, q: float, f_value: float) -> float:
    s = stencil(field.grid, field.values).at(node)
    return float(-p_laplacian(s, p)[0] + hamiltonian(s, q)[0] - f_value)


def wall_drive(grid: Grid, p: float, g_cap: float) -> np.ndarray:
    """Flux entering a boundary node through its outer half-cell face.

    The outer face carries the flux of a gradient of size ``g_cap`` rising
    toward the wall. Zero at interior nodes. Independent of the solution, so
    it leaves the scheme monotone.
    """
    missing = grid.neighbors < 0
    present_h = np.where(missing, grid.spacing[:, ::-1], np.nan)
    per_side = np.where(missing, g_cap ** (p - 1) / (0.5 * present_h), 0.0)
    return np.nan_to_num(per_side).sum(axis=(0, 1))


def boundary_layer_gradient(h: float, p: float, q: float) -> float:
    """Gradient of the self-similar layer ``-(M/beta) d^beta`` at ``d = h/2``.

    ``M^(q-p+1) = (p-1)(1-beta)`` balances diffusion against ``|Du|^q`` in the
    layer; used as the default gradient cap.
    """
    beta = (q - p) / (q - p + 1)
    amp = ((p - 1) * (1 - beta)) ** (1.0 / (q - p + 1))
    return amp * (0.5 * h) ** (beta - 1)


def linearize(grid: Grid, u, p: float, q: float):
    """Residual of ``-pLap + H`` and its (semismooth) Jacobian as CSR.

    Exact in 1D. In 2D the dependence of the face modulus on tangential
    neighbours is dropped, which keeps the matrix an M-matrix.
    """
    u = _values(u)
    s = stencil(grid, u)
    N = grid.size
    nb = grid.neighbors
    rows, cols, vals = [], [], []
    diag = np.zeros(N)
    idx = np.arange(N)

    # Hamiltonian
    m = godunov_components(s)
    mod = np.sqrt((m * m).sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        dHdm = np.where(mod > 0, q * mod ** (q - 2) * m, 0.0)
    a = np.where(np.isnan(s.dminus), -np.inf, s.dminus)
    b = np.where(np.isnan(s.dplus), -np.inf, -s.dplus)
    for k in range(grid.dim):
        use_minus = (a[k] >= b[k]) & (m[k] > 0)
        use_plus = (b[k] > a[k]) & (m[k] > 0)
        c = dHdm[k] / np.where(use_minus, s.h_minus[k], s.h_plus[k])
        sel = use_minus | use_plus
        diag[sel] += c[sel]
        rows.append(idx[use_minus]); cols.append(nb[k, 0, use_minus]); vals.append(-c[use_minus])
        rows.append(idx[use_plus]); cols.append(nb[k, 1, use_plus]); vals.append(-c[use_plus])

    # minus the p-Laplacian
    miss_m = np.isnan(s.dminus)
    miss_p = np.isnan(s.dplus)
    hm = np.where(miss_m, 0.0, np.nan_to_num(s.h_minus))
    hp = np.where(miss_p, 0.0, np.nan_to_num(s.h_plus))
    width = 0.5 * (hm + hp)
    sm = np.where(miss_m, 0.0, _flux_slope(np.nan_to_num(s.dminus), s.tangential_minus, p))
    spl = np.where(miss_p, 0.0, _flux_slope(np.nan_to_num(s.dplus), s.tangential_plus, p))
    with np.errstate(divide="ignore", invalid="ignore"):
        cm = np.where(miss_m | (width == 0), 0.0, sm / (hm * width))
        cp = np.where(miss_p | (width == 0), 0.0, spl / (hp * width))
    for k in range(grid.dim):
        diag += cm[k] + cp[k]
        ok = ~miss_m[k]
        rows.append(idx[ok]); cols.append(nb[k, 0, ok]); vals.append(-cm[k, ok])
        ok = ~miss_p[k]
        rows.append(idx[ok]); cols.append(nb[k, 1, ok]); vals.append(-cp[k, ok])

    rows.append(idx); cols.append(idx); vals.append(diag)
    J = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    res = -p_laplacian(s, p) + hamiltonian(s, q)
    return res, J
