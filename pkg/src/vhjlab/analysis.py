"""Post-processing: Hölder exponent and seminorm, large-time slope, comparison runs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .parabolic import (NonFinite, ParabolicProblem, ProblemError, StepControl, Stepper,
                        _clip_to, _snapshot_times, boundary_update)


class InsufficientSamples(ValueError):
    pass


def beta_exponent(p: float, q: float) -> float:
    """Hölder exponent ``(q-p)/(q-p+1)`` of subsolutions."""
    if not q > p:
        raise ProblemError(f"need q > p, got p={p}, q={q}")
    return (q - p) / (q - p + 1)


@dataclass
class HolderReport:
    beta: float
    seminorm: float
    pair: tuple[int, int]
    history: list = field(default_factory=list)


def holder_seminorm(field_or_values, beta: float, points: np.ndarray | None = None,
                    chunk: int = 512) -> HolderReport:
    """Exact ``max |u(x)-u(y)| / |x-y|^beta`` over node pairs.

    Ties within a relative 1e-12 go to the lexicographically smallest pair.
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if points is None:
        points = field_or_values.grid.points
        values = field_or_values.values
    else:
        values = np.asarray(field_or_values, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(len(values), -1)
    n = len(values)
    if n < 2:
        raise ValueError("need at least two nodes")
    best, pair = -1.0, (0, 1)
    rows = []
    for start in range(0, n - 1, chunk):
        i = np.arange(start, min(start + chunk, n - 1))
        dist = np.linalg.norm(pts[i, None, :] - pts[None, :, :], axis=-1)
        diff = np.abs(values[i, None] - values[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = diff / dist**beta
        ratio[np.arange(n)[None, :] <= i[:, None]] = -1.0
        ratio[~np.isfinite(ratio)] = -1.0
        rows.append((i, ratio.max(axis=1)))
    top = max(float(r.max()) for _, r in rows)
    thresh = top * (1 - 1e-12) if top > 0 else top
    for i, rmax in rows:
        hit = np.flatnonzero(rmax >= thresh)
        if hit.size:
            a = int(i[hit[0]])
            dist = np.linalg.norm(pts[a] - pts, axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.abs(values[a] - values) / dist**beta
            ratio[: a + 1] = -1.0
            ratio[~np.isfinite(ratio)] = -1.0
            b = int(np.flatnonzero(ratio >= thresh)[0])
            best, pair = max(top, 0.0), (a, b)
            break
    return HolderReport(beta=beta, seminorm=best, pair=pair, history=[(n, best)])


def holder_refinement(fields, beta: float) -> HolderReport:
    """Seminorm on each field (e.g. successive grids or discounts); reports the last."""
    reports = [holder_seminorm(f, beta) for f in fields]
    last = reports[-1]
    last.history = [(r.history[0][0], r.seminorm) for r in reports]
    return last


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    samples: int
    spread: float


def slope_fit(times, snapshots, window_fraction: float = 0.5) -> SlopeFit:
    if not 0 < window_fraction < 1:
        raise ValueError("window_fraction must lie in (0, 1)")
    times = np.asarray(times, dtype=float)
    snaps = np.asarray(snapshots, dtype=float)
    T = times[-1]
    sel = times >= T - window_fraction * (T - times[0])
    if sel.sum() < 3:
        raise InsufficientSamples(f"only {int(sel.sum())} snapshots in the fit window")
    t = times[sel]
    mean = snaps[sel].mean(axis=1)
    slope, icpt = np.polyfit(t, mean, 1)
    per_node = np.polyfit(t, snaps[sel], 1)[0]
    return SlopeFit(float(slope), float(icpt), int(sel.sum()),
                    float(np.max(np.abs(per_node - slope))))


def asymptotic_slope(trajectory, window_fraction: float = 0.5) -> float:
    """Least-squares slope of ``t -> mean_x u(x, t)`` over the last part of the horizon."""
    return slope_fit(trajectory.times, trajectory.snapshots, window_fraction).slope


@dataclass
class PairRun:
    times: np.ndarray
    first: np.ndarray
    second: np.ndarray

    @property
    def violation(self) -> float:
        return float(np.max(np.maximum(self.first - self.second, 0.0)))


@dataclass
class ComparisonReport:
    max_violation: float
    violations: list
    runs: list = field(repr=False, default_factory=list)

    @property
    def worst_pair(self) -> int:
        return int(np.argmax(self.violations))


def _static(problem):
    return problem.f.time_independent and problem.g.time_independent


def run_pair(first: ParabolicProblem, second: ParabolicProblem,
             control: StepControl | None = None) -> PairRun:
    """March two problems on one grid with a common step size."""
    control = control or StepControl()
    if first.grid is not second.grid or (first.p, first.q, first.T) != (second.p, second.q, second.T):
        raise ProblemError("paired problems must share grid, exponents and horizon")
    grid, p, q = first.grid, first.p, first.q
    cap = control.cap(grid, p, q)
    st = Stepper(grid, p, q, cap)
    pts, b = grid.points, grid.boundary
    u1, u2 = first.u0.copy(), second.u0.copy()
    out = [(0.0, u1.copy(), u2.copy())]
    t, steps = 0.0, 0
    fast = st.fast and _static(first) and _static(second)
    if fast:
        f1 = np.ascontiguousarray(first.f(pts, 0.0))
        f2 = np.ascontiguousarray(second.f(pts, 0.0))
        g1 = first.g(pts[b], 0.0)
        g2 = second.g(pts[b], 0.0)
    for t_out in _snapshot_times(first.T, control):
        if fast:
            t, k, status = _kernels.march_pair_1d(
                u1, u2, t, t_out, st.h, st.p, st.q, f1, f2, float(g1[0]), float(g1[-1]),
                float(g2[0]), float(g2[-1]), st.wall, control.sigma, cap, control.dt_floor,
                control.max_steps - steps)
            steps += k
            if status == 1:
                raise NonFinite(steps, t)
            if status == 2:
                raise ProblemError(f"step budget exhausted at t={t:.6g}")
        else:
            while t < t_out:
                r1, G1 = st.rates(u1, first.f(pts, t))
                r2, G2 = st.rates(u2, second.f(pts, t))
                dt, t_next = _clip_to(t, st.dt(max(G1, G2), control), t_out)
                u1 = u1 + dt * r1
                u2 = u2 + dt * r2
                u1[b] = boundary_update(u1[b], first.g(pts[b], t_next))
                u2[b] = boundary_update(u2[b], second.g(pts[b], t_next))
                if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
                    raise NonFinite(steps, t_next)
                t = t_next
                steps += 1
        out.append((t, u1.copy(), u2.copy()))
    times = np.array([o[0] for o in out])
    return PairRun(times, np.array([o[1] for o in out]), np.array([o[2] for o in out]))


def comparison_harness(pairs, control: StepControl | None = None) -> ComparisonReport:
    """Largest ``(u1 - u2)+`` over nodes and snapshots for each ordered pair."""
    runs = [run_pair(a, b, control) for a, b in pairs]
    viol = [r.violation for r in runs]
    return ComparisonReport(max(viol, default=0.0), viol, runs)


def envelope_excess(problem: ParabolicProblem, times, snapshots) -> float:
    """Largest ``|u| - (t ||f|| + ||g|| + ||u0||)``; nonpositive inside the envelope.

    Sup norms of ``f`` and ``g`` are sampled at the snapshot times.
    """
    pts, b = problem.grid.points, problem.grid.boundary
    times = np.asarray(times, dtype=float)
    f_sup = max(float(np.max(np.abs(problem.f(pts, t)))) for t in times)
    g_sup = max(float(np.max(np.abs(problem.g(pts[b], t)), initial=0.0)) for t in times)
    u0_sup = float(np.max(np.abs(problem.u0)))
    bound = times * f_sup + g_sup + u0_sup
    return float(np.max(np.abs(np.asarray(snapshots)).max(axis=1) - bound))
