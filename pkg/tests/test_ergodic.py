import numpy as np
import pytest
from scipy.integrate import quad

from vhjlab.domain import build_grid
from vhjlab.ergodic import ergodic_solve, interval_constant, shift_check
from vhjlab.parabolic import ProblemError

PAIRS = [(2, 3), (2, 4), (3, 4), (3, 5)]


@pytest.mark.parametrize("p,q", PAIRS)
def test_closed_form_constant_satisfies_the_first_integral(p, q):
    # half the interval equals the time the profile needs to blow up
    a = -interval_constant(p, q)
    val, _ = quad(lambda s: (p - 1) * s ** (p - 2) / (s**q + a), 0, np.inf)
    assert val == pytest.approx(0.5, rel=1e-9)


def test_closed_form_scaling_in_length():
    p, q = 2, 3
    assert interval_constant(p, q, 2.0) == pytest.approx(
        interval_constant(p, q) * 2.0 ** (-q / (q - p + 1)))


@pytest.mark.parametrize("p,q", PAIRS)
def test_discrete_constant_converges_to_closed_form(p, q):
    exact = interval_constant(p, q)
    errs = []
    for n in (64, 128, 256):
        res = ergodic_solve(build_grid("interval:0:1", n), p, q, 0.0)
        errs.append(abs(res.c - exact))
    # roughly first order: each halving of h removes at least a quarter of the error
    assert errs[1] <= 0.75 * errs[0] and errs[2] <= 0.75 * errs[1]
    assert errs[2] <= 0.07 * abs(exact)


def test_shift_equivariance_is_exact_in_the_scheme():
    g = build_grid("interval:0:1", 128)
    r0 = ergodic_solve(g, 2, 3, 0.0)
    for s in (1.0, -3.0, 0.5):
        rs = ergodic_solve(g, 2, 3, s)
        dc, dw = shift_check(None, s, r0, rs)
        assert dc <= 1e-6
        assert dw <= 1e-6


def test_ladder_bookkeeping():
    g = build_grid("interval:0:1", 64)
    res = ergodic_solve(g, 3, 4, "sin(pi*x)")
    assert res.c_k.shape == (10,)
    assert res.w_k.shape == (10, g.size)
    assert np.all(res.w_k[:, res.x0] == 0)
    assert res.band_violations == 0
    assert res.converged
    assert len(res.table()) == 10


def test_positive_constant_for_strong_negative_source():
    g = build_grid("interval:0:1", 128)
    res = ergodic_solve(g, 2, 3, -5.0)
    assert res.c > 1.0


@pytest.mark.parametrize("lams", [[0.5, 0.5], [0.1, 0.2], [0.5, -0.1], []])
def test_bad_ladders(lams):
    with pytest.raises(ProblemError):
        ergodic_solve(build_grid("interval:0:1", 16), 2, 3, 0.0, lambdas=lams)
