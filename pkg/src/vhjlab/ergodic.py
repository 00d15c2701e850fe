"""Ergodic constant by vanishing discount.

For a decreasing discount ladder ``lam_k`` the state-constraint problems are
solved in turn, each warm-started from the previous profile. The estimates
are ``c_k = -lam_k u_k(x0)`` and ``w_k = u_k - u_k(x0)``; the answer is the last
rung, without extrapolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barriers import constants_for_grid
from .domain import Grid
from .parabolic import ProblemError, StepControl, as_data, check_exponents
from .stationary import ConstraintActive, NoConvergence, solve_state_constraint

DEFAULT_LAMBDAS = tuple(2.0 ** -k for k in range(1, 11))


@dataclass
class ErgodicResult:
    lambdas: np.ndarray
    c_k: np.ndarray
    w_k: np.ndarray
    x0: int
    M2: float
    band: float
    diagnostics: list = field(default_factory=list)

    @property
    def c(self) -> float:
        return float(self.c_k[-1])

    @property
    def u_inf(self) -> np.ndarray:
        return self.w_k[-1]

    @property
    def c_steps(self) -> np.ndarray:
        return np.abs(np.diff(self.c_k))

    @property
    def w_steps(self) -> np.ndarray:
        return np.max(np.abs(np.diff(self.w_k, axis=0)), axis=1)

    @property
    def converged(self) -> bool:
        if len(self.c_k) < 2:
            return False
        return bool(self.c_steps[-1] < 1e-2 * (1 + abs(self.c)))

    @property
    def band_violations(self) -> int:
        return int(np.count_nonzero(np.abs(self.c_k) > self.band))

    def table(self) -> list[dict]:
        return [{"lambda": float(l), "c": float(c), "lambda_u_x0": float(-c)}
                for l, c in zip(self.lambdas, self.c_k)]


def ergodic_solve(grid: Grid, p: float, q: float, f, lambdas=DEFAULT_LAMBDAS,
                  control: StepControl | None = None, x0: int | None = None,
                  M2: float | None = None, tol: float | None = None,
                  cross_check: bool = False) -> ErgodicResult:
    check_exponents(p, q)
    lams = np.asarray(lambdas, dtype=float)
    if lams.size == 0 or np.any(lams <= 0) or np.any(np.diff(lams) >= 0):
        raise ProblemError("discounts must be positive and strictly decreasing")
    f_values = np.array(as_data(f)(grid.points, 0.0))
    if M2 is None:
        M2 = constants_for_grid(grid, p, q, f_values, lam=float(lams[0])).M2
    x0 = grid.deepest_node() if x0 is None else int(x0)
    band = max(float(np.max(np.abs(f_values))), M2)

    c_k, w_k, diags = [], [], []
    initial = offset = None
    for k, lam in enumerate(lams):
        try:
            res = solve_state_constraint(grid, p, q, lam, f_values, M2, control, tol,
                                         initial=initial, offset=offset,
                                         cross_check=cross_check)
        except (ConstraintActive, NoConvergence) as exc:
            exc.lam = float(lam)
            raise
        v = res.shifted
        c = -(lam * res.offset + lam * v[x0])
        w = v - v[x0]
        c_k.append(c)
        w_k.append(w)
        d = {key: val for key, val in res.diagnostics.items() if key != "residual_history"}
        d["lambda"] = float(lam)
        diags.append(d)
        # next rung: same profile, level moved to the new discount
        if k + 1 < lams.size:
            offset = -c / lams[k + 1]
            initial = offset + w
    return ErgodicResult(lambdas=lams, c_k=np.array(c_k), w_k=np.array(w_k), x0=x0,
                         M2=float(M2), band=band, diagnostics=diags)


def interval_constant(p: float, q: float, length: float = 1.0) -> float:
    """Exact ergodic constant for ``f = 0`` on an interval of the given length.

    The profile is symmetric with ``|w'|`` blowing up at both ends. Writing
    ``a = -c > 0``, the first integral gives ``length/2 = int_0^inf (p-1) s^(p-2)/(s^q + a) ds``,
    which evaluates in closed form.
    """
    check_exponents(p, q)
    k = 2 * (p - 1) * (math.pi / q) / math.sin((p - 1) * math.pi / q)
    return -((k / length) ** (q / (q - p + 1)))


def shift_check(f, s: float, result0: ErgodicResult, result_s: ErgodicResult):
    """``(|(c_s - c_0) + s|, ||u_inf,s - u_inf,0||)``: both vanish for an exact shift."""
    if result0.u_inf.shape != result_s.u_inf.shape:
        raise ValueError("results come from different grids")
    if s == 0 and result0 is result_s:
        return 0.0, 0.0
    return (abs((result_s.c - result0.c) + s),
            float(np.max(np.abs(result_s.u_inf - result0.u_inf))))
