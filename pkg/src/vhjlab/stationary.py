"""Discounted stationary problem ``-div(|Du|^(p-2)Du) + |Du|^q + lam*u = f`` with generalized Dirichlet data.

The discrete system is the steady state of the explicit scheme in
:mod:`vhjlab.parabolic`. Interior rows read ``F_i(u) = 0`` and boundary rows
``max(F_b(u) - wall_b, u_b - g_b) = 0``, which is exactly the fixed point of
``u_b <- min(g, u_b - dt (F_b - wall_b))``. Passing ``g=None`` drops the datum
and keeps only the PDE row ``F_b - wall_b = 0``: the one-sided state-constraint
scheme. Its zero-flux variant (``layer=False``) is the discrete Neumann problem,
kept as a diagnostic: constants solve it, so it misses the boundary layer of the
state-constraint solution.

The system is solved by pseudo-transient continuation: implicit Euler in
pseudo-time with a semismooth Newton linearization and a pseudo-step that
grows as the residual falls. Explicit pseudo-time marching would need
``~ 1/(lam * dt)`` steps, which is out of reach at small discounts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import discrete_ops as ops
from .domain import Grid
from .parabolic import SolverError, StepControl, as_data, check_exponents, ProblemError


class NoConvergence(SolverError):
    def __init__(self, message: str, residual: float, lam: float | None = None):
        super().__init__(message)
        self.residual = residual
        self.lam = lam


class ConstraintActive(SolverError):
    def __init__(self, message: str, lam: float | None = None):
        super().__init__(message)
        self.lam = lam


@dataclass
class StationaryProblem:
    grid: Grid
    p: float
    q: float
    lam: float
    f: object = 0.0
    g: object = 0.0

    def __post_init__(self):
        check_exponents(self.p, self.q)
        if not self.lam >= 0:
            raise ProblemError(f"discount must be nonnegative, got {self.lam}")
        pts = self.grid.points
        self.f_values = np.array(as_data(self.f)(pts, 0.0))
        if self.g is None:
            self.g_values = None
        else:
            self.g_values = np.array(as_data(self.g)(pts[self.grid.boundary], 0.0))


@dataclass
class StationaryResult:
    """Solution stored as ``offset + shifted`` so that large discounted values keep
    their small-scale structure to full precision."""

    grid: Grid
    offset: float
    shifted: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.offset + self.shifted

    def field(self) -> ops.Field:
        return ops.Field(self.grid, self.values)


def _system(grid, v, p, q, lam, rhs, wall, g_shift):
    """Residual and Jacobian of the discrete system in the shifted unknown ``v``."""
    res, J = ops.linearize(grid, v, p, q)
    res = res + lam * v - rhs - wall
    J = J + lam * sp.identity(grid.size, format="csr")
    if g_shift is None:
        return res, J.tocsr()
    b = grid.boundary
    pde = res[b]
    datum = v[b] - g_shift
    use_datum = datum > pde
    res[b] = np.where(use_datum, datum, pde)
    if use_datum.any():
        J = J.tolil()
        for node in b[use_datum]:
            J.rows[node] = [node]
            J.data[node] = [1.0]
        J = J.tocsr()
    return res, J


def _norm(r):
    return float(np.max(np.abs(r))) if r.size else 0.0


def newton_solve(grid: Grid, p: float, q: float, lam: float, f_values: np.ndarray,
                 g_values: np.ndarray | None, *, g_cap: float, tol: float,
                 initial: np.ndarray | None = None, offset: float | None = None,
                 max_iter: int = 2000, dtau0: float = 1e-2,
                 layer: bool = True) -> StationaryResult:
    if offset is None:
        base = initial if initial is not None else f_values
        offset = float(np.mean(base) / lam) if (initial is None and lam > 0) else float(np.mean(base))
    wall = ops.wall_drive(grid, p, g_cap)
    wall = np.where(grid.is_boundary & layer, wall, 0.0)
    rhs = f_values - lam * offset
    g_shift = None if g_values is None else g_values - offset
    v = np.zeros(grid.size) if initial is None else np.asarray(initial, float) - offset

    res, J = _system(grid, v, p, q, lam, rhs, wall, g_shift)
    rnorm = _norm(res)
    dtau = dtau0
    history = [rnorm]
    stall = 0
    it = 0
    status = "converged"
    while rnorm >= tol:
        if it >= max_iter:
            raise NoConvergence(f"no convergence after {max_iter} pseudo-steps "
                                f"(residual {rnorm:.3g}, tol {tol:.3g})", rnorm, lam)
        it += 1
        accepted = False
        for attempt in range(40):
            A = J + sp.identity(grid.size, format="csr") / dtau
            step = spla.spsolve(A.tocsc(), -res)
            trial = v + step
            if np.all(np.isfinite(trial)):
                res_t, J_t = _system(grid, trial, p, q, lam, rhs, wall, g_shift)
                rn = _norm(res_t)
                if rn < rnorm * (1 + 1e-3) or rn < tol:
                    accepted = True
                    break
            dtau *= 0.25
        if not accepted:
            raise NoConvergence(f"pseudo-step collapsed at residual {rnorm:.3g}", rnorm, lam)
        scale = 1.0 + _norm(v)
        tiny_step = _norm(step) <= 1e-13 * scale
        if attempt == 0:
            dtau = min(dtau * min(10.0, max(2.0, rnorm / max(rn, 1e-300))), 1e12)
        v, res, J = trial, res_t, J_t
        stall = stall + 1 if (rn > 0.9 * rnorm and dtau >= 1e11) or tiny_step else 0
        rnorm = rn
        history.append(rnorm)
        if stall >= 8:
            # Newton has reached round-off; accept only if close to the target
            if rnorm < 1e3 * tol:
                status = "round-off"
                break
            raise NoConvergence(f"stalled at residual {rnorm:.3g} (tol {tol:.3g})", rnorm, lam)

    diag = {"iterations": it, "residual": rnorm, "tol": tol, "status": status,
            "g_cap": g_cap, "residual_history": history}
    if g_shift is not None:
        b = grid.boundary
        diag["boundary_detached"] = int(np.count_nonzero(g_shift - v[b] > 1e-9 * (1 + abs(offset))))
    return StationaryResult(grid=grid, offset=offset, shifted=v, diagnostics=diag)


def default_tol(f_values: np.ndarray) -> float:
    return 1e-8 * (1 + float(np.max(np.abs(f_values), initial=0.0)))


def solve_stationary(problem: StationaryProblem, control: StepControl | None = None,
                     tol: float | None = None, initial: np.ndarray | None = None,
                     **kwargs) -> StationaryResult:
    if not problem.lam > 0:
        raise ProblemError("the stationary solver needs a positive discount")
    control = control or StepControl()
    tol = default_tol(problem.f_values) if tol is None else tol
    cap = control.cap(problem.grid, problem.p, problem.q)
    return newton_solve(problem.grid, problem.p, problem.q, problem.lam, problem.f_values,
                        problem.g_values, g_cap=cap, tol=tol, initial=initial, **kwargs)


def solve_state_constraint(grid: Grid, p: float, q: float, lam: float, f, M2: float,
                           control: StepControl | None = None, tol: float | None = None,
                           initial: np.ndarray | None = None, offset: float | None = None,
                           cross_check: bool = True) -> StationaryResult:
    """Large-datum realization: generalized Dirichlet data ``R = 2 M2 / lam``.

    The datum must end up inactive (``u < R - h`` on the boundary). With
    ``cross_check`` the one-sided scheme without datum is solved as well and
    the sup-norm discrepancy is recorded.
    """
    if not lam > 0:
        raise ProblemError("the state-constraint solver needs a positive discount")
    if not M2 > 0:
        raise ProblemError(f"M2 must be positive, got {M2}")
    control = control or StepControl()
    f_values = np.array(as_data(f)(grid.points, 0.0))
    tol = default_tol(f_values) if tol is None else tol
    cap = control.cap(grid, p, q)
    R = 2.0 * M2 / lam
    g_values = np.full(grid.boundary.size, R)
    res = newton_solve(grid, p, q, lam, f_values, g_values, g_cap=cap, tol=tol,
                       initial=initial, offset=offset)
    ub = res.values[grid.boundary]
    margin = float(R - ub.max())
    res.diagnostics.update(R=R, boundary_margin=margin, M2=M2)
    if not margin > grid.h:
        raise ConstraintActive(f"boundary value reaches R - h (R={R:.6g}, margin {margin:.3g}); "
                               f"M2 too small or grid too coarse", lam)
    if cross_check:
        alt = newton_solve(grid, p, q, lam, f_values, None, g_cap=cap, tol=tol,
                           offset=res.offset)
        res.diagnostics["one_sided_gap"] = float(np.max(np.abs(alt.shifted - res.shifted)))
        res.diagnostics["one_sided_iterations"] = alt.diagnostics["iterations"]
    return res


def solve_one_sided(grid: Grid, p: float, q: float, lam: float, f,
                    control: StepControl | None = None, tol: float | None = None,
                    initial=None, offset=None, layer: bool = True) -> StationaryResult:
    """State-constraint scheme with the PDE row at boundary nodes and no datum."""
    control = control or StepControl()
    f_values = np.array(as_data(f)(grid.points, 0.0))
    tol = default_tol(f_values) if tol is None else tol
    return newton_solve(grid, p, q, lam, f_values, None, g_cap=control.cap(grid, p, q),
                        tol=tol, initial=initial, offset=offset, layer=layer)
