import numpy as np
import pytest

from vhjlab import discrete_ops as ops
from vhjlab.analysis import beta_exponent
from vhjlab.barriers import constants_for_grid
from vhjlab.domain import build_grid
from vhjlab.parabolic import ProblemError, StepControl
from vhjlab.stationary import (ConstraintActive, NoConvergence, StationaryProblem,
                               newton_solve, solve_one_sided, solve_state_constraint,
                               solve_stationary)

PAIRS = [(2, 3), (2, 4), (3, 4), (3, 5)]


@pytest.mark.parametrize("p,q", PAIRS)
def test_constant_solution(p, q):
    g = build_grid("interval:0:1", 32)
    res = solve_stationary(StationaryProblem(g, p, q, lam=0.5, f=1.0, g=2.0))
    assert np.abs(res.values - 2.0).max() <= 1e-12


def test_nonpositive_discount_rejected():
    g = build_grid("interval:0:1", 8)
    with pytest.raises(ProblemError):
        StationaryProblem(g, 2, 3, lam=-1)
    with pytest.raises(ProblemError):
        solve_stationary(StationaryProblem(g, 2, 3, lam=0.0))


@pytest.mark.parametrize("p,q", [(2, 3), (3, 4)])
def test_solution_is_a_steady_state_of_the_explicit_scheme(p, q):
    g = build_grid("interval:0:1", 64)
    lam = 0.5
    prob = StationaryProblem(g, p, q, lam, f="sin(pi*x)", g=0.2)
    res = solve_stationary(prob)
    u = res.values
    cap = StepControl().cap(g, p, q)
    r = -ops.residual(g, u, p, q, prob.f_values - lam * u) + ops.wall_drive(g, p, cap)
    inner = g.interior
    assert np.abs(r[inner]).max() <= 1e-7
    b = g.boundary
    # boundary rows: either attached to the datum or the pde row vanishes
    attached = np.abs(u[b] - 0.2) <= 1e-9
    assert np.all(attached | (np.abs(r[b]) <= 1e-7))
    assert np.all(u[b] <= 0.2 + res.diagnostics["tol"])


def test_large_datum_detaches_and_matches_one_sided_scheme():
    g = build_grid("interval:0:1", 128)
    f = np.zeros(g.size)
    M2 = constants_for_grid(g, 2, 3, f).M2
    res = solve_state_constraint(g, 2, 3, 1.0, f, M2)
    d = res.diagnostics
    assert d["boundary_margin"] > g.h
    assert d["one_sided_gap"] <= 5 * g.h ** beta_exponent(2, 3)
    assert d["boundary_detached"] == 2


def test_too_small_M2_is_reported():
    g = build_grid("interval:0:1", 64)
    with pytest.raises(ConstraintActive):
        solve_state_constraint(g, 2, 3, 1.0, 0.0, M2=1e-3, cross_check=False)


def test_state_constraint_profile_has_boundary_cusp():
    g = build_grid("interval:0:1", 256)
    res = solve_one_sided(g, 2, 3, 1.0, 0.0)
    u = res.values
    # boundary value is the maximum; the profile drops steeply away from it
    assert u[0] == pytest.approx(u.max())
    slopes = -np.diff(u[:6]) / g.h
    assert np.all(np.diff(slopes) < 0)
    assert slopes[0] > 2 * slopes[4]


def test_zero_flux_variant_is_only_the_neumann_problem():
    # constants solve the zero-flux variant, which misses the boundary layer
    g = build_grid("interval:0:1", 64)
    neu = solve_one_sided(g, 2, 3, 1.0, 0.0, layer=False)
    assert np.abs(neu.values).max() <= 1e-8
    sc = solve_one_sided(g, 2, 3, 1.0, 0.0)
    assert np.abs(sc.values).max() > 1.0


def test_iteration_budget():
    g = build_grid("interval:0:1", 64)
    with pytest.raises(NoConvergence) as err:
        newton_solve(g, 2, 3, 1e-3, np.zeros(g.size), None, g_cap=10.0, tol=1e-12,
                     max_iter=2)
    assert err.value.residual > 0


def test_offset_storage_reconstructs_values():
    g = build_grid("interval:0:1", 32)
    res = solve_one_sided(g, 2, 3, 0.01, -1.0)
    np.testing.assert_allclose(res.values, res.offset + res.shifted)
    assert abs(res.offset) > 10
