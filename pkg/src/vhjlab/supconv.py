"""Sup-convolution in time, ``u^a(x, t) = max_s u(x, s) - (t - s)^2 / a^2``, on a stored mesh.

The max runs over the stored time levels only, so the brute-force double loop
is the definition and doubles as the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class EmptyWindow(ValueError):
    pass


@dataclass
class TimeSeriesField:
    """Values ``u[n, i]`` at time ``times[n]`` and node ``i``."""

    times: np.ndarray
    values: np.ndarray
    source_K: float | None = None
    argmax: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[0] != self.times.size:
            self.values = self.values.reshape(self.times.size, -1)
        if self.times.size < 2 or np.any(np.diff(self.times) <= 0):
            raise ValueError("time mesh must be strictly increasing with at least two levels")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series values must be finite")

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def K(self) -> float:
        return math.sqrt(2.0 * self.sup_norm)

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def max_step(self) -> float:
        return float(np.max(np.diff(self.times)))

    def scaled(self, factor: float) -> "TimeSeriesField":
        return TimeSeriesField(self.times, factor * self.values)


def _tie_order(times: np.ndarray) -> np.ndarray:
    """For each target index, source indices sorted by ``(|s - t|, s)``."""
    dist = np.abs(times[:, None] - times[None, :])
    order = np.lexsort((np.broadcast_to(times, dist.shape), dist), axis=1)
    return order


def _check_alpha(alpha):
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def window_mask(series: TimeSeriesField, alpha: float, K: float | None = None) -> np.ndarray:
    """Times strictly inside ``(t0 + K a, T - K a)``; raises when that interval is empty."""
    K = series.K if K is None else K
    if series.span <= 2 * K * alpha:
        raise EmptyWindow(f"horizon {series.span:.4g} does not exceed 2 K alpha = {2 * K * alpha:.4g}")
    t0, T = series.times[0], series.times[-1]
    return (series.times > t0 + K * alpha) & (series.times < T - K * alpha)


def sup_convolve(series: TimeSeriesField, alpha: float, restrict: bool = False) -> TimeSeriesField:
    """Regularize every node in time. With ``restrict`` only the interior window is returned."""
    _check_alpha(alpha)
    t = series.times
    u = series.values
    order = _tie_order(t)
    out = np.empty_like(u)
    arg = np.empty(u.shape, dtype=np.int64)
    for n in range(t.size):
        idx = order[n]
        cand = u[idx] - ((t[n] - t[idx]) ** 2 / alpha**2)[:, None]
        k = np.argmax(cand, axis=0)
        out[n] = cand[k, np.arange(u.shape[1])]
        arg[n] = idx[k]
    result = TimeSeriesField(t, out, source_K=series.K, argmax=arg)
    if restrict:
        keep = window_mask(series, alpha)
        result = TimeSeriesField(t[keep], out[keep], source_K=series.K, argmax=arg[keep])
    return result


def sup_convolve_bruteforce(times, values, alpha: float) -> np.ndarray:
    """Literal double loop over target and source times."""
    times = np.asarray(times, float)
    values = np.asarray(values, float).reshape(len(times), -1)
    out = np.full_like(values, -np.inf)
    for n, tn in enumerate(times):
        for m, sm in enumerate(times):
            out[n] = np.maximum(out[n], values[m] - (tn - sm) ** 2 / alpha**2)
    return out


@dataclass
class LipschitzCheck:
    max_slope: float
    bound: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.max_slope <= self.bound + self.slack


def check_time_lipschitz(regularized: TimeSeriesField, alpha: float,
                         K: float | None = None) -> LipschitzCheck:
    """Largest difference quotient in time against ``2K/a`` (slack ``10 dt / a^2``)."""
    _check_alpha(alpha)
    K = regularized.source_K if K is None else K
    if K is None:
        raise ValueError("K unknown: pass it or use a series from sup_convolve")
    dt = np.diff(regularized.times)
    slopes = np.abs(np.diff(regularized.values, axis=0)) / dt[:, None]
    return LipschitzCheck(float(slopes.max()), 2 * K / alpha, 10 * float(dt.max()) / alpha**2)


def check_maximizer_window(series: TimeSeriesField, alpha: float) -> bool:
    """Every maximizer lies within ``K a + dt`` of its target time."""
    reg = sup_convolve(series, alpha)
    gap = np.abs(series.times[reg.argmax] - series.times[:, None])
    return bool(np.all(gap < series.K * alpha + series.max_step))


def maximizer_offsets(series: TimeSeriesField, alpha: float) -> np.ndarray:
    reg = sup_convolve(series, alpha)
    return series.times[reg.argmax] - series.times[:, None]


def initial_layer_excess(series: TimeSeriesField, alpha: float) -> float:
    """``max_x [u^a(x, t1) - max_{s <= t1 + K a} u(x, s)]`` with ``t1`` the first level past ``K a``.

    Nonpositive when the initial layer bound holds.
    """
    K = series.K
    t = series.times
    later = np.flatnonzero(t - t[0] >= K * alpha)
    if later.size == 0:
        raise EmptyWindow("no time level beyond K alpha")
    n1 = int(later[0])
    reg = sup_convolve(series, alpha)
    early = t <= t[n1] + K * alpha
    return float(np.max(reg.values[n1] - series.values[early].max(axis=0)))
