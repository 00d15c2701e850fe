"""Explicit solver for the evolution problem with generalized Dirichlet data.

Interior nodes take a forward-Euler step of ``u_t = -residual``. A boundary
node takes the same step with its one-sided stencil plus the wall flux, and the
result is clipped at the datum: ``u_b <- min(g, candidate)``. Wherever the clip
is inactive the boundary value has detached from ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from . import discrete_ops as ops
from .domain import Grid
from .expr import Expression

EPS0 = 1e-12


class SolverError(RuntimeError):
    pass


class NonFinite(SolverError):
    def __init__(self, step: int, t: float):
        super().__init__(f"solution became non-finite at step {step} (t={t:.6g})")
        self.step = step
        self.t = t


class HorizonTooShort(SolverError):
    pass


class ProblemError(ValueError):
    pass


def as_data(obj) -> Callable[[np.ndarray, float], np.ndarray]:
    """Wrap a constant, a nodal array, an expression string or a callable ``(points, t)``.

    The wrapper carries ``time_independent`` so solvers can evaluate it once.
    """
    if isinstance(obj, str):
        obj = Expression(obj)
    if callable(obj):
        fn = obj
        static = bool(getattr(obj, "time_independent", False))
    else:
        arr = np.asarray(obj, dtype=float)

        def fn(points, t, _arr=arr):
            return np.broadcast_to(_arr, (points.shape[0],)).astype(float)

        static = True

    def wrapped(points, t):
        return np.broadcast_to(np.asarray(fn(points, t), dtype=float), (points.shape[0],))

    wrapped.time_independent = static
    wrapped.origin = obj
    return wrapped


def check_exponents(p: float, q: float) -> None:
    if not (p >= 2 and q > p):
        raise ProblemError(f"exponents must satisfy q > p >= 2 (got p={p}, q={q})")


@dataclass
class ParabolicProblem:
    grid: Grid
    p: float
    q: float
    f: object = 0.0
    g: object = 0.0
    u0: object = 0.0
    T: float = 1.0

    def __post_init__(self):
        check_exponents(self.p, self.q)
        if not self.T > 0:
            raise ProblemError(f"horizon T must be positive, got {self.T}")
        self.f = as_data(self.f)
        self.g = as_data(self.g)
        u0 = self.u0
        u0 = u0(self.grid.points, 0.0) if callable(u0) else u0
        self.u0 = np.array(np.broadcast_to(np.asarray(u0, dtype=float), (self.grid.size,)))
        b = self.grid.boundary
        gap = np.abs(self.u0[b] - self.g(self.grid.points[b], 0.0))
        if gap.size and gap.max() > 1e-12:
            raise ProblemError(f"compatibility u0 = g(., 0) violated on the boundary "
                               f"(max gap {gap.max():.3g})")

    def g_boundary(self, t: float) -> np.ndarray:
        b = self.grid.boundary
        return self.g(self.grid.points[b], t)


@dataclass
class StepControl:
    sigma: float = 0.5
    g_cap: float | None = None
    dt_floor: float = 1e-14
    snapshot_dt: float | None = None
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not 0 < self.sigma <= 1:
            raise ValueError(f"CFL safety factor must lie in (0, 1], got {self.sigma}")
        if self.g_cap is not None and not (0 < self.g_cap < math.inf):
            raise ValueError(f"gradient cap must be finite and positive, got {self.g_cap}")

    def cap(self, grid: Grid, p: float, q: float) -> float:
        if self.g_cap is not None:
            return float(self.g_cap)
        return ops.boundary_layer_gradient(grid.h, p, q)


def max_gradient(s: ops.StencilSample) -> float:
    """Largest one-sided difference magnitude over the grid (bounds every face slope)."""
    a = np.fmax(np.abs(s.dminus), np.abs(s.dplus))
    return float(np.sqrt(np.nanmax(np.nan_to_num(a) ** 2, axis=1).sum()))


def cfl_dt(field, p: float, q: float, control: StepControl, *, h: float | None = None,
           dim: int | None = None, gradient: float | None = None) -> float:
    """Largest monotone forward-Euler step for the current state.

    ``field`` may be a :class:`~vhjlab.discrete_ops.Field`; otherwise pass
    ``h``, ``dim`` and ``gradient`` directly.
    """
    if isinstance(field, ops.Field):
        grid = field.grid
        h = grid.min_spacing if h is None else h
        dim = grid.dim
        if gradient is None:
            gradient = max_gradient(ops.stencil(grid, field.values))
        cap = control.cap(grid, p, q)
    else:
        cap = control.g_cap if control.g_cap is not None else math.inf
    G = min(float(gradient), cap)
    # p > 2: the diffusion coefficient vanishes with the gradient; floor at 1
    Gd = 1.0 if p == 2 else max(G, 1.0)
    diff = h * h / (2 * dim * (p - 1) * Gd ** (p - 2) + EPS0)
    hj = h / (q * G ** (q - 1) + EPS0)
    return max(control.sigma * min(diff, hj), control.dt_floor)


def boundary_update(candidate_pde_value, g_value):
    """Generalized Dirichlet rule: the datum caps the PDE update from above."""
    return np.minimum(g_value, candidate_pde_value)


class Stepper:
    """Rate evaluator ``u -> (u_t, max |Du|)`` for one grid and exponent pair.

    Uniform 1D grids go through the compiled kernel; anything else through
    the numpy operators.
    """

    def __init__(self, grid: Grid, p: float, q: float, g_cap: float):
        self.grid, self.p, self.q, self.cap = grid, float(p), float(q), float(g_cap)
        self.wall = ops.wall_drive(grid, p, g_cap)
        self.h = grid.min_spacing
        self.fast = grid.dim == 1 and bool(np.allclose(grid.spacing[0, 0, 1:], self.h,
                                                          rtol=1e-12, atol=0))
        self._out = np.empty(grid.size)

    def rates(self, u: np.ndarray, f_values) -> tuple[np.ndarray, float]:
        f_values = np.ascontiguousarray(np.broadcast_to(f_values, (self.grid.size,)), dtype=float)
        if self.fast:
            out = np.empty(self.grid.size)
            G = _kernels.rates_1d(u, self.h, self.p, self.q, f_values, self.wall, out)
            return out, float(G)
        s = ops.stencil(self.grid, u)
        r = ops.p_laplacian(s, self.p) - ops.hamiltonian(s, self.q) + f_values + self.wall
        return r, max_gradient(s)

    def dt(self, G: float, control: StepControl) -> float:
        return cfl_dt(None, self.p, self.q, control, h=self.h, dim=self.grid.dim,
                      gradient=min(G, self.cap))


def explicit_update(grid: Grid, u: np.ndarray, dt: float, p: float, q: float,
                    f_values: np.ndarray, g_next: np.ndarray, g_cap: float,
                    wall: np.ndarray | None = None) -> np.ndarray:
    """One forward-Euler step including the boundary rule."""
    if wall is None:
        wall = ops.wall_drive(grid, p, g_cap)
    r = ops.residual(grid, u, p, q, f_values) - wall
    new = u - dt * r
    b = grid.boundary
    new[b] = boundary_update(new[b], g_next)
    return new


@dataclass
class Trajectory:
    grid: Grid
    times: np.ndarray
    snapshots: np.ndarray
    g_snapshots: np.ndarray
    step_dt: np.ndarray
    step_max_gradient: np.ndarray
    step_detached: np.ndarray
    step_boundary_excess: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def boundary_gaps(self) -> np.ndarray:
        return self.g_snapshots - self.snapshots[:, self.grid.boundary]


def _snapshot_times(T: float, control: StepControl) -> np.ndarray:
    step = control.snapshot_dt if control.snapshot_dt else T / 20
    n = max(1, int(math.ceil(T / step - 1e-9)))
    ts = np.minimum(step * np.arange(1, n + 1), T)
    ts[-1] = T
    return np.unique(ts)


class _Buffer:
    def __init__(self, dtype):
        self.a = np.empty(1024, dtype=dtype)
        self.n = 0

    def push(self, v):
        if self.n == self.a.size:
            self.a = np.resize(self.a, 2 * self.a.size)
        self.a[self.n] = v
        self.n += 1

    def extend(self, values):
        need = self.n + len(values)
        if need > self.a.size:
            self.a = np.resize(self.a, max(need, 2 * self.a.size))
        self.a[self.n:need] = values
        self.n = need

    def view(self):
        return self.a[: self.n].copy()


def _clip_to(t: float, dt: float, t_out: float) -> tuple[float, float]:
    if t + dt >= t_out * (1 - 1e-13) or t_out - (t + dt) < 1e-3 * dt:
        return t_out - t, t_out
    return dt, t + dt


def solve_parabolic(problem: ParabolicProblem, control: StepControl | None = None,
                    detach_tol: float | None = None) -> Trajectory:
    control = control or StepControl()
    grid, p, q = problem.grid, problem.p, problem.q
    if problem.T < control.dt_floor:
        raise HorizonTooShort(f"T={problem.T} is below the step floor {control.dt_floor}")
    cap = control.cap(grid, p, q)
    stepper = Stepper(grid, p, q, cap)
    b = grid.boundary
    pts, pts_b = grid.points, grid.points[b]

    u = problem.u0.copy()
    t = 0.0
    f_static = problem.f.time_independent
    f_vals = np.ascontiguousarray(problem.f(pts, 0.0)) if f_static else None
    g_static = problem.g.time_independent
    g_fixed = np.array(problem.g(pts_b, 0.0)) if g_static else None
    if detach_tol is None:
        detach_tol = 1e-6 * (1 + float(np.max(np.abs(problem.g_boundary(0.0)), initial=0.0)))

    out_times = _snapshot_times(problem.T, control)
    times, snaps, gsnaps = [0.0], [problem.u0.copy()], [problem.g_boundary(0.0).copy()]
    dts, grads, detached, excess = (_Buffer(float), _Buffer(np.float32),
                                   _Buffer(np.int32), _Buffer(float))
    step = 0
    compiled = stepper.fast and f_static and g_static
    gfun = getattr(problem.g.origin, "scalar_kernel", None) if not g_static else None
    timed = stepper.fast and f_static and gfun is not None
    for t_out in out_times:
        if compiled or timed:
            while t < t_out:
                budget = control.max_steps - step
                if budget <= 0:
                    raise SolverError(f"step budget {control.max_steps} exhausted at t={t:.6g}")
                chunk = min(budget, 1 << 16)
                bd, bg, be = np.empty(chunk), np.empty(chunk), np.empty(chunk)
                bn = np.empty(chunk, dtype=np.int32)
                if compiled:
                    t, k, status = _kernels.march_1d(
                        u, t, t_out, stepper.h, stepper.p, stepper.q, f_vals,
                        float(g_fixed[0]), float(g_fixed[-1]), stepper.wall, control.sigma,
                        cap, control.dt_floor, budget, bd, bg, bn, be, detach_tol)
                else:
                    t, k, status = _kernels.march_1d_timed(
                        u, t, t_out, stepper.h, stepper.p, stepper.q, f_vals, gfun,
                        float(pts_b[0, 0]), float(pts_b[-1, 0]), stepper.wall,
                        control.sigma, cap, control.dt_floor, budget, bd, bg, bn, be,
                        detach_tol)
                dts.extend(bd[:k]); grads.extend(bg[:k])
                detached.extend(bn[:k]); excess.extend(be[:k])
                step += k
                if status == 1:
                    raise NonFinite(step, t)
        else:
            while t < t_out:
                if step >= control.max_steps:
                    raise SolverError(f"step budget {control.max_steps} exhausted at t={t:.6g}")
                fv = f_vals if f_static else problem.f(pts, t)
                r, G = stepper.rates(u, fv)
                dt, t_next = _clip_to(t, stepper.dt(G, control), t_out)
                gv = g_fixed if g_static else problem.g(pts_b, t_next)
                new = u + dt * r
                new[b] = boundary_update(new[b], gv)
                if not np.all(np.isfinite(new)):
                    raise NonFinite(step, t_next)
                u = new
                t = t_next
                step += 1
                dts.push(dt)
                grads.push(G)
                detached.push(int(np.count_nonzero(gv - u[b] > detach_tol)))
                excess.push(float(np.max(u[b] - gv, initial=-np.inf)))
        times.append(t)
        snaps.append(u.copy())
        gsnaps.append(np.array(g_fixed if g_static else problem.g(pts_b, t), dtype=float))
    return Trajectory(grid=grid, times=np.array(times), snapshots=np.array(snaps),
                      g_snapshots=np.array(gsnaps), step_dt=dts.view(),
                      step_max_gradient=grads.view(), step_detached=detached.view(),
                      step_boundary_excess=excess.view(),
                      meta={"p": p, "q": q, "T": problem.T, "g_cap": cap,
                            "sigma": control.sigma, "steps": step,
                            "detach_tol": detach_tol})


def detect_boundary_loss(trajectory: Trajectory, tol: float | None = None):
    """``(time, node, g - u)`` for every snapshot and boundary node with a gap above ``tol``."""
    if tol is None:
        tol = 1e-6 * (1 + float(np.max(np.abs(trajectory.g_snapshots), initial=0.0)))
    if not tol > 0:
        raise ValueError("tol must be positive")
    gaps = trajectory.boundary_gaps()
    nodes = trajectory.grid.boundary
    events = []
    for k, t in enumerate(trajectory.times):
        for j in np.flatnonzero(gaps[k] > tol):
            events.append((float(t), int(nodes[j]), float(gaps[k, j])))
    return events
