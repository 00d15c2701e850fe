import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vhjlab import discrete_ops as ops
from vhjlab.domain import build_grid
from vhjlab.expr import Expression
from vhjlab.parabolic import (HorizonTooShort, ParabolicProblem, ProblemError, StepControl,
                              cfl_dt, detect_boundary_loss, explicit_update, solve_parabolic)

PAIRS = [(2, 3), (2, 4), (3, 4), (3, 5)]


class Slow:
    """Static data that is deliberately not marked static, forcing the generic loop."""

    def __init__(self, value):
        self.value = value

    def __call__(self, points, t):
        return np.full(len(points), self.value)


@pytest.mark.parametrize("p,q", PAIRS)
def test_zero_data_stays_zero(p, q):
    g = build_grid("interval:0:1", 32)
    traj = solve_parabolic(ParabolicProblem(g, p, q, T=0.1))
    assert np.all(traj.snapshots == 0.0)


@pytest.mark.parametrize("p,q", PAIRS)
def test_compatible_constant_is_a_fixed_point(p, q):
    g = build_grid("disc:1", 8)
    traj = solve_parabolic(ParabolicProblem(g, p, q, g=-0.75, u0=-0.75, T=0.01))
    assert np.all(traj.snapshots == -0.75)


@pytest.mark.parametrize("bad", [(2, 2), (1.5, 3), (3, 2.5)])
def test_exponent_check(bad):
    g = build_grid("interval:0:1", 8)
    with pytest.raises(ProblemError, match="q > p >= 2"):
        ParabolicProblem(g, *bad)


def test_incompatible_initial_data_rejected():
    g = build_grid("interval:0:1", 8)
    with pytest.raises(ProblemError):
        ParabolicProblem(g, 2, 3, g=1.0, u0=0.0)


def test_horizon_below_step_floor():
    g = build_grid("interval:0:1", 8)
    with pytest.raises(HorizonTooShort):
        solve_parabolic(ParabolicProblem(g, 2, 3, T=1e-16))


def test_bad_controls():
    with pytest.raises(ValueError):
        StepControl(sigma=1.5)
    with pytest.raises(ValueError):
        StepControl(g_cap=math.inf)


def test_cfl_formula():
    c = StepControl(sigma=0.5)
    dt = cfl_dt(None, 3, 4, c, h=0.1, dim=1, gradient=2.0)
    assert dt == pytest.approx(0.5 * min(0.01 / (2 * 2 * 2 + 1e-12), 0.1 / (4 * 8 + 1e-12)))
    # p = 2: diffusion limit independent of the gradient
    dt2 = cfl_dt(None, 2, 3, c, h=0.1, dim=2, gradient=0.0)
    assert dt2 == pytest.approx(0.5 * 0.01 / 4, rel=1e-9)


def test_sine_decays_with_zero_data():
    g = build_grid("interval:0:1", 64)
    traj = solve_parabolic(ParabolicProblem(g, 2, 3, u0=Expression("0.1*sin(pi*x)"), T=1.0))
    sup = np.abs(traj.snapshots).max(axis=1)
    assert np.all(np.diff(sup) <= 1e-15)
    # heat-equation decay rate pi^2, the Hamiltonian only speeds it up
    assert sup[-1] <= 0.1 * math.exp(-math.pi**2 * 1.0) * 1.05


def test_compiled_and_generic_paths_agree():
    g = build_grid("interval:0:1", 32)
    u0 = Expression("0.3*sin(pi*x)")
    fast = solve_parabolic(ParabolicProblem(g, 3, 4, f=0.5, u0=u0, T=0.05))
    slow = solve_parabolic(ParabolicProblem(g, 3, 4, f=Slow(0.5), g=Slow(0.0), u0=u0, T=0.05))
    np.testing.assert_allclose(fast.snapshots, slow.snapshots, atol=1e-12)
    np.testing.assert_array_equal(fast.step_dt, slow.step_dt)


def test_timed_kernel_matches_generic_loop():
    g = build_grid("interval:0:1", 32)
    data = Expression("3*t")
    fast = solve_parabolic(ParabolicProblem(g, 2, 3, g=data, T=0.05))

    def slow_g(points, t):
        return np.full(len(points), 3 * t)

    slow = solve_parabolic(ParabolicProblem(g, 2, 3, g=slow_g, T=0.05))
    np.testing.assert_allclose(fast.snapshots, slow.snapshots, atol=1e-12)


def test_explicit_update_matches_one_solver_step():
    g = build_grid("interval:0:1", 16)
    u0 = np.sin(np.pi * g.x) * 0.5
    c = StepControl()
    cap = c.cap(g, 2, 3)
    dt = cfl_dt(ops.Field(g, u0), 2, 3, c)
    new = explicit_update(g, u0.copy(), dt, 2, 3, np.ones(g.size), np.zeros(2), cap)
    traj = solve_parabolic(ParabolicProblem(g, 2, 3, f=1.0, u0=u0, T=dt),
                           StepControl(snapshot_dt=dt))
    assert traj.meta["steps"] == 1
    np.testing.assert_allclose(traj.final, new, atol=1e-14)


@settings(max_examples=15)
@given(a=st.floats(-2, 2), s=st.floats(-20, 60), f=st.floats(-5, 5),
       pq=st.sampled_from(PAIRS))
def test_never_above_datum(a, s, f, pq):
    g = build_grid("interval:0:1", 24)
    prob = ParabolicProblem(g, *pq, f=f, g=Expression(f"{a} + {s}*t"), u0=a, T=0.05)
    traj = solve_parabolic(prob)
    assert traj.step_boundary_excess.max() <= 0.0
    assert np.array_equal(traj.snapshots[0], prob.u0)


def test_translation_equivariance():
    g = build_grid("interval:0:1", 32)
    u0 = Expression("0.2*sin(pi*x)")
    a = solve_parabolic(ParabolicProblem(g, 2, 3, f=-1.0, u0=u0, T=0.1))
    b = solve_parabolic(ParabolicProblem(g, 2, 3, f=-1.0, g=1.0,
                                         u0=Expression("1 + 0.2*sin(pi*x)"), T=0.1))
    np.testing.assert_allclose(b.snapshots - a.snapshots, 1.0, atol=1e-12)


def test_fast_rising_datum_detaches():
    g = build_grid("interval:0:1", 128)
    traj = solve_parabolic(ParabolicProblem(g, 2, 3, g=Expression("50*t"), T=0.5))
    events = detect_boundary_loss(traj)
    assert events
    assert traj.boundary_gaps()[-1].min() > 10
    # the first snapshots are still attached
    assert traj.boundary_gaps()[0].max() == 0


def test_boundary_loss_tolerance_validation():
    g = build_grid("interval:0:1", 8)
    traj = solve_parabolic(ParabolicProblem(g, 2, 3, T=0.01))
    assert detect_boundary_loss(traj) == []
    with pytest.raises(ValueError):
        detect_boundary_loss(traj, tol=0.0)


def test_snapshot_times_hit_requested_grid():
    g = build_grid("interval:0:1", 16)
    traj = solve_parabolic(ParabolicProblem(g, 2, 3, T=0.3), StepControl(snapshot_dt=0.1))
    np.testing.assert_allclose(traj.times, [0, 0.1, 0.2, 0.3], rtol=0, atol=1e-15)
    assert traj.step_dt.sum() == pytest.approx(0.3)
