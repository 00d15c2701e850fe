"""Explicit barriers and their numerical certification.

* the local barrier ``w1(x) = (C1/beta)|x|^beta + (C2/beta)(d(0)^beta - d(x)^beta)``
  on the unit ball, with ``d(x) = h(1 - |x|)`` and ``h`` the concave cut-off below;
* its rescalings ``w_r(x) = r^beta w1(x/r)``;
* the global supersolution ``ubar = -(M1/beta) d^beta + M2/lam`` and the
  constant choices (``M1``, ``M2``) that make it one.

Margins are checked by sampling, not certified rigorously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import beta_exponent
from .domain import Grid


class SearchExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class Smoother:
    """``h(s) = s`` for ``s <= 1/2``, ``h = 5/8`` for ``s >= 3/4``, polynomial blend between.

    On the blend, with ``t = 4(s - 1/2)``, ``h' = 1 - 3t^2 + 2t^3`` (one minus the
    cubic smoothstep), so ``h`` is C2, nondecreasing and concave. The plateau
    value ``5/8`` is what integrating that ``h'`` gives.
    """

    lo: float = 0.5
    hi: float = 0.75

    @property
    def plateau(self) -> float:
        return self.lo + 0.5 * (self.hi - self.lo)

    def _t(self, s):
        return np.clip((np.asarray(s, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        t = self._t(s)
        w = self.hi - self.lo
        blend = self.lo + w * (t - t**3 + 0.5 * t**4)
        return np.where(s <= self.lo, s, blend)

    def d1(self, s):
        s = np.asarray(s, dtype=float)
        t = self._t(s)
        return np.where(s <= self.lo, 1.0, 1.0 - 3 * t**2 + 2 * t**3)

    def d2(self, s):
        s = np.asarray(s, dtype=float)
        t = self._t(s)
        return np.where(s <= self.lo, 0.0, -6.0 * t * (1.0 - t) / (self.hi - self.lo))


@dataclass(frozen=True)
class BarrierParams:
    p: float
    q: float
    C1: float = 0.0
    C2: float = 0.0
    M1: float = 1.0 + 1e-9
    M2: float = 1.0
    delta: float = 0.1
    C: float = 1.0
    dim: int = 2
    notes: dict = field(default_factory=dict, compare=False)

    @property
    def beta(self) -> float:
        return beta_exponent(self.p, self.q)


# ---------------------------------------------------------------- local barrier


def eval_w1(x, params: BarrierParams, smoother: Smoother = Smoother()):
    """Value, gradient and Hessian of ``w1`` at points ``x`` of shape ``(..., N)``.

    At ``|x| = 1`` the value is finite but ``d = 0`` makes the derivatives infinite.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ValueError("w1 is singular at the origin")
    if np.any(r > 1 + 1e-12):
        raise ValueError("w1 is defined on the closed unit ball")
    b = params.beta
    C1, C2 = params.C1, params.C2
    N = x.shape[-1]
    s = 1.0 - r
    d = smoother(s)
    hp, hpp = smoother.d1(s), smoother.d2(s)
    d0 = smoother.plateau
    xh = x / r[..., None]
    eye = np.eye(N)
    outer = xh[..., :, None] * xh[..., None, :]

    with np.errstate(divide="ignore", invalid="ignore"):
        value = C1 / b * r**b + C2 / b * (d0**b - d**b)
        Dd = -hp[..., None] * xh
        D2d = hpp[..., None, None] * outer - (hp / r)[..., None, None] * (eye - outer)
        grad = C1 * (r ** (b - 2))[..., None] * x - C2 * (d ** (b - 1))[..., None] * Dd
        hess = (C1 * (r ** (b - 2))[..., None, None] * eye
                + (b - 2) * C1 * (r ** (b - 4))[..., None, None] * (x[..., :, None] * x[..., None, :])
                - C2 * (d ** (b - 1))[..., None, None] * D2d
                - (b - 1) * C2 * (d ** (b - 2))[..., None, None] * (Dd[..., :, None] * Dd[..., None, :]))
    return value, grad, hess


def G_operator(grad, hess, p: float, q: float, C: float):
    """``-(p-1)|s|^(p-2) sum(positive eigenvalues of M) + |s|^q - C``."""
    s = np.linalg.norm(grad, axis=-1)
    lam = np.linalg.eigvalsh(hess)
    pos = np.where(lam > 0, lam, 0.0).sum(axis=-1)
    pre = np.ones_like(s) if p == 2 else s ** (p - 2)
    return -(p - 1) * pre * pos + s**q - C


def sample_ball(sample_count: int, dim: int, r_min: float = 1e-6, r_max: float = 1 - 1e-6,
                radii: int | None = None):
    """Radial-angular points: log-spaced radii and equispaced directions."""
    if dim == 1:
        nr = max(sample_count // 2, 1)
        rs = np.geomspace(r_min, r_max, nr)
        return np.concatenate([rs, -rs])[:, None]
    n_ang = max(int(round(math.sqrt(sample_count / 4))), 4)
    nr = radii or max(sample_count // n_ang, 1)
    rs = np.geomspace(r_min, r_max, nr)
    th = np.linspace(0.0, 2 * math.pi, n_ang, endpoint=False)
    R, T = np.meshgrid(rs, th, indexing="ij")
    return np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])


def h2_margins(points, params: BarrierParams, C: float | None = None,
               smoother: Smoother = Smoother()) -> np.ndarray:
    C = params.C if C is None else C
    _, g, H = eval_w1(points, params, smoother)
    return G_operator(g, H, params.p, params.q, C)


def verify_H2(params: BarrierParams, C: float | None = None, sample_count: int = 4000,
              dim: int | None = None, smoother: Smoother = Smoother()):
    """Minimum of ``G1(Dw1, D2w1)`` over a sample of the punctured ball and where it occurs."""
    if sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    pts = sample_ball(sample_count, dim or params.dim)
    m = h2_margins(pts, params, C, smoother)
    k = int(np.argmin(m))
    return float(m[k]), pts[k]


def scale_wr(r: float, x, params: BarrierParams, smoother: Smoother = Smoother()):
    """``w_r(x) = r^beta w1(x / r)`` for ``0 < |x| <= r``."""
    if not 0 < r <= 1:
        raise ValueError(f"scale must lie in (0, 1], got {r}")
    x = np.asarray(x, dtype=float)
    v, _, _ = eval_w1(x / r, params, smoother)
    return r**params.beta * v


def wr_margins(r: float, x, params: BarrierParams, C: float | None = None,
               smoother: Smoother = Smoother()) -> np.ndarray:
    """``G(Dw_r, D2w_r)`` by the chain rule, evaluated at ``x`` with ``0 < |x| <= r``."""
    if not 0 < r <= 1:
        raise ValueError(f"scale must lie in (0, 1], got {r}")
    C = params.C if C is None else C
    b = params.beta
    _, g, H = eval_w1(np.asarray(x, float) / r, params, smoother)
    return G_operator(r ** (b - 1) * g, r ** (b - 2) * H, params.p, params.q, C)


def scaling_exponent(p: float, q: float) -> float:
    """``(beta-1)(p-1) - 1``, which equals ``q(beta-1)``."""
    b = beta_exponent(p, q)
    return (b - 1) * (p - 1) - 1


def scaled_margin_bound(r: float, p: float, q: float, C: float) -> float:
    return r ** scaling_exponent(p, q) * C - C


def _double_until(fn, start: float, what: str, limit: int = 60) -> float:
    value = start
    for _ in range(limit):
        if fn(value):
            return value
        value *= 2.0
    raise SearchExhausted(f"{what} not found after {limit} doublings")


def find_local_constants(p: float, q: float, C: float = 1.0, dim: int = 2,
                         sample_count: int = 4000, smoother: Smoother = Smoother()):
    """``C2`` first (positive bracket on the outer annulus), then ``C1`` (global margin)."""
    base = BarrierParams(p=p, q=q, C=C, dim=dim)
    pts = sample_ball(sample_count, dim)
    annulus = pts[np.linalg.norm(pts, axis=1) >= 0.5]

    def c2_ok(c2):
        m = h2_margins(annulus, replace(base, C1=0.0, C2=c2), C=0.0, smoother=smoother)
        return bool(np.all(m > 0))

    C2 = _double_until(c2_ok, 1.0, "C2")

    def c1_ok(c1):
        m = h2_margins(pts, replace(base, C1=c1, C2=C2), smoother=smoother)
        return bool(np.all(m > 0))

    C1 = _double_until(c1_ok, 1.0, "C1")
    return C1, C2


# ---------------------------------------------------------------- global supersolution


@dataclass(frozen=True)
class SmoothDistance:
    """A C2 concave surrogate of the boundary distance: ``ell * h(dist / ell)``.

    ``ell`` is four thirds of the inradius, so the surrogate equals the true
    distance within two thirds of the inradius from the boundary and is flat
    at the centre.
    """

    d: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    ell: float


def smoothed_distance(grid: Grid, smoother: Smoother = Smoother()) -> SmoothDistance:
    pts = grid.points
    if grid.kind == "interval":
        a, b = grid.extent
        ell = (4.0 / 3.0) * 0.5 * (b - a)
        x = pts[:, 0]
        dist = np.minimum(x - a, b - x)
        ddist = np.where(x - a <= b - x, 1.0, -1.0)[:, None]
        d2dist = np.zeros((grid.size, 1, 1))
    elif grid.kind == "disc":
        (R,) = grid.extent
        ell = (4.0 / 3.0) * R
        r = np.linalg.norm(pts, axis=1)
        dist = np.clip(R - r, 0.0, None)
        safe = np.where(r > 0, r, 1.0)
        xh = pts / safe[:, None]
        xh[r == 0] = 0.0
        ddist = -xh
        outer = xh[:, :, None] * xh[:, None, :]
        d2dist = -(np.eye(2) - outer) / safe[:, None, None]
        d2dist[r == 0] = 0.0
    else:
        raise ValueError(f"no smooth distance for grid kind {grid.kind!r}")
    s = dist / ell
    hp, hpp = smoother.d1(s), smoother.d2(s)
    d = ell * smoother(s)
    grad = hp[:, None] * ddist
    hess = (hpp / ell)[:, None, None] * (ddist[:, :, None] * ddist[:, None, :]) \
        + hp[:, None, None] * d2dist
    d[grid.is_boundary] = 0.0
    return SmoothDistance(d=d, grad=grad, hess=hess, ell=ell)


@dataclass(frozen=True)
class DomainNorms:
    """Sup norms entering the constant conditions.

    ``d`` powers are taken over the discrete core ``{d > delta}``; the
    continuum values on ``[delta, d_max]`` are kept for comparison.
    """

    dim: int
    delta: float
    hess_collar: float
    hess_core: float
    d_core_min: float
    d_core_max: float
    f_sup: float

    def d_power(self, e: float, continuum: bool = False) -> float:
        lo = self.delta if continuum else self.d_core_min
        return max(lo**e, self.d_core_max**e)

    def discrete_gap(self, e: float) -> float:
        a, b = self.d_power(e), self.d_power(e, continuum=True)
        return abs(a - b) / max(abs(b), 1e-300)


def domain_norms(grid: Grid, f_values, smooth: SmoothDistance | None = None) -> DomainNorms:
    smooth = smooth or smoothed_distance(grid)
    eig = np.abs(np.linalg.eigvalsh(smooth.hess)).max(axis=1)
    collar, core = grid.collar, grid.core
    if core.size == 0:
        raise ValueError("grid has no core nodes beyond the collar width")
    dcore = smooth.d[core]
    return DomainNorms(dim=grid.dim, delta=grid.delta,
                       hess_collar=float(eig[collar].max()) if collar.size else 0.0,
                       hess_core=float(eig[core].max()),
                       d_core_min=float(dcore.min()), d_core_max=float(dcore.max()),
                       f_sup=float(np.max(np.abs(f_values), initial=0.0)))


def collar_condition_rhs(p: float, q: float, delta: float, hess_norm: float, dim: int) -> float:
    b = beta_exponent(p, q)
    return ((p - 1) * (1 - b) + (p - 2 + math.sqrt(dim)) * delta * hess_norm
            + delta ** (b * (2 - p) + p) / b)


def m1_for_collar(p: float, q: float, delta: float, hess_norm: float, dim: int) -> float:
    """Smallest ``M1`` with ``M1^(q-p+1)`` above the collar bound, kept strictly above 1."""
    root = collar_condition_rhs(p, q, delta, hess_norm, dim) ** (1.0 / (q - p + 1))
    return max(root, 1.0 + 1e-9)


def m2_for_core(p: float, q: float, M1: float, norms: DomainNorms, slack: float = 0.01,
                   continuum: bool = False) -> float:
    b = beta_exponent(p, q)
    e = (b - 1) * (p - 1)
    core = (M1 ** (p - 1) * ((p - 1) * (1 - b) * norms.d_power(e - 1, continuum)
                             + (p - 2 + math.sqrt(norms.dim)) * norms.d_power(e, continuum)
                             * norms.hess_core)
            + M1 / b * norms.d_power(b, continuum) + 3 * norms.f_sup)
    return max((1 + slack) * core, 2 * norms.f_sup)


def auto_constants(p: float, q: float, delta: float, norms: DomainNorms, lam: float,
                   C: float = 1.0, sample_count: int = 4000,
                   smoother: Smoother = Smoother()) -> BarrierParams:
    if not all(math.isfinite(v) for v in (norms.hess_collar, norms.hess_core,
                                           norms.d_core_min, norms.f_sup)):
        raise ValueError("domain norms must be finite")
    b = beta_exponent(p, q)
    M1 = m1_for_collar(p, q, delta, norms.hess_collar, norms.dim)
    M2 = m2_for_core(p, q, M1, norms)
    C1, C2 = find_local_constants(p, q, C, norms.dim, sample_count, smoother)
    e = (b - 1) * (p - 1)
    gaps = {"d^(e-1)": norms.discrete_gap(e - 1), "d^e": norms.discrete_gap(e),
            "d^beta": norms.discrete_gap(b)}
    notes = {"lam": lam, "discrete_norm_gap": gaps,
             "discrete_norm_flag": any(g > 0.01 for g in gaps.values()),
             "M2_continuum": m2_for_core(p, q, M1, norms, continuum=True)}
    return BarrierParams(p=p, q=q, C1=C1, C2=C2, M1=M1, M2=M2, delta=delta, C=C,
                         dim=norms.dim, notes=notes)


def ubar_operator(smooth: SmoothDistance, p: float, q: float, lam: float, f_values,
                  M1: float, M2: float) -> np.ndarray:
    """``-div(|Dubar|^(p-2)Dubar) + |Dubar|^q + lam*ubar - f`` in closed form.

    Uses the expansion in powers of ``d``; nodes with ``d = 0`` give ``+inf``.
    """
    b = beta_exponent(p, q)
    d, Dd, D2d = smooth.d, smooth.grad, smooth.hess
    gn = np.linalg.norm(Dd, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(gn[:, None] > 0, Dd / gn[:, None], 0.0)
        lap = np.trace(D2d, axis1=1, axis2=2)
        quad = np.einsum("ni,nij,nj->n", unit, D2d, unit)
        bracket = ((p - 1) * (b - 1) * gn**2 + d * lap + (p - 2) * d * quad
                   + M1 ** (q - p + 1) * gn ** (q - p + 2))
        pre = M1 ** (p - 1) * (gn ** (p - 2) if p != 2 else 1.0) * d ** (q * (b - 1))
        core = np.where(d > 0, pre * bracket, np.inf)
    return core - lam * M1 / b * d**b + M2 - np.broadcast_to(f_values, d.shape)


def verify_ubar(grid: Grid, p: float, q: float, lam: float, f_values, params: BarrierParams,
                smooth: SmoothDistance | None = None):
    """Minimum supersolution margin over the collar and over the core (interior nodes)."""
    smooth = smooth or smoothed_distance(grid)
    val = ubar_operator(smooth, p, q, lam, f_values, params.M1, params.M2)
    return float(val[grid.collar].min()), float(val[grid.core].min())


def ubar_values(smooth: SmoothDistance, params: BarrierParams, lam: float) -> np.ndarray:
    return -params.M1 / params.beta * smooth.d ** params.beta + params.M2 / lam


def constants_for_grid(grid: Grid, p: float, q: float, f_values, lam: float = 1.0,
                       C: float = 1.0, sample_count: int = 4000) -> BarrierParams:
    """:func:`auto_constants` with norms measured on ``grid``."""
    norms = domain_norms(grid, np.broadcast_to(np.asarray(f_values, float), (grid.size,)))
    return auto_constants(p, q, grid.delta, norms, lam, C, sample_count)
