import numpy as np
import pytest
import sympy as sy
from hypothesis import assume, given, strategies as st

from vhjlab import discrete_ops as ops
from vhjlab.domain import build_grid
from vhjlab.parabolic import StepControl, Stepper

PAIRS = [(2, 3), (2, 4), (3, 4), (3, 5)]


def test_field_validation():
    g = build_grid("interval:0:1", 4)
    with pytest.raises(ValueError):
        ops.Field(g, np.zeros(3))
    with pytest.raises(ValueError):
        ops.Field(g, np.array([0, 1, np.nan, 0, 0.0]))


def test_laplacian_of_quadratic_is_exact():
    g = build_grid("interval:0:1", 16)
    lap = ops.p_laplacian(ops.stencil(g, g.x**2), 2)
    np.testing.assert_allclose(lap[g.interior], 2.0, rtol=1e-12)


@pytest.mark.parametrize("p", [2, 3, 4.5])
def test_affine_has_zero_interior_flux_divergence(p):
    g = build_grid("interval:0:1", 10)
    lap = ops.p_laplacian(ops.stencil(g, 3 * g.x - 1), p)
    np.testing.assert_allclose(lap[g.interior], 0.0, atol=1e-10)


def test_flux_form_second_order_for_smooth_data():
    # (|u'|u')' = 2|u'|u'' for u = sin
    errs = []
    for n in (32, 64, 128):
        g = build_grid("interval:0:1", n)
        x = g.x
        exact = 2 * np.abs(np.cos(x)) * (-np.sin(x))
        num = ops.p_laplacian(ops.stencil(g, np.sin(x)), 3)
        errs.append(np.abs(num - exact)[g.interior].max())
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9)


def test_expanded_form_agrees_in_the_interior():
    g = build_grid("interval:0:1", 400)
    s = ops.stencil(g, np.sin(2 * g.x) + g.x)
    a = ops.p_laplacian(s, 3)
    b = ops.p_laplacian_expanded(s, 3)
    inner = g.interior[2:-2]
    np.testing.assert_allclose(a[inner], b[inner], atol=1e-3)


@given(st.lists(st.floats(-5, 5), min_size=5, max_size=20))
def test_godunov_matches_bruteforce(vals):
    u = np.array(vals)
    g = build_grid("interval:0:1", u.size - 1)
    h = g.h
    got = ops.upwind_gradient(ops.stencil(g, u))
    for i in range(u.size):
        a = (u[i] - u[i - 1]) / h if i > 0 else -np.inf
        b = (u[i] - u[i + 1]) / h if i < u.size - 1 else -np.inf
        assert got[i] == pytest.approx(max(a, b, 0.0), rel=1e-12, abs=1e-12)


def test_godunov_ignores_downhill_sides():
    g = build_grid("interval:0:1", 4)
    # local minimum: both sides slope away, no upwind information
    s = ops.stencil(g, np.array([2.0, 1.0, 0.0, 1.0, 2.0]))
    assert ops.upwind_gradient(s)[2] == 0.0


@pytest.mark.parametrize("p,q", PAIRS)
@given(data=st.data())
def test_explicit_step_is_monotone(p, q, data):
    n = 12
    g = build_grid("interval:0:1", n)
    cap = StepControl().cap(g, p, q)
    amp = 0.3 * cap * g.h
    u = np.array(data.draw(st.lists(st.floats(-amp, amp), min_size=n + 1, max_size=n + 1)))
    i = data.draw(st.integers(0, n))
    j = data.draw(st.sampled_from([k for k in (i - 1, i + 1) if 0 <= k <= n]))
    bump = data.draw(st.floats(1e-6, amp))
    v = u.copy()
    v[j] += bump
    stp = Stepper(g, p, q, cap)
    ru, Gu = stp.rates(u, 0.0)
    rv, Gv = stp.rates(v, 0.0)
    assume(max(Gu, Gv) <= cap)
    dt = stp.dt(max(Gu, Gv), StepControl())
    assert v[i] + dt * rv[i] >= u[i] + dt * ru[i] - 1e-12


@pytest.mark.parametrize("p,q", PAIRS)
def test_compiled_rates_match_numpy_operators(p, q):
    g = build_grid("interval:0:1", 40)
    cap = StepControl().cap(g, p, q)
    u = np.sin(3 * g.x) * 0.2 + g.x**2
    f = np.cos(g.x)
    stp = Stepper(g, p, q, cap)
    assert stp.fast
    r, G = stp.rates(u, f)
    s = ops.stencil(g, u)
    ref = ops.p_laplacian(s, p) - ops.hamiltonian(s, q) + f + stp.wall
    np.testing.assert_allclose(r, ref, rtol=1e-12, atol=1e-10)


@pytest.mark.parametrize("p,q", [(2, 3), (3, 4), (2.5, 5)])
def test_jacobian_matches_finite_differences(p, q):
    g = build_grid("interval:0:1", 12)
    u = 0.3 * np.sin(2.3 * g.x + 0.4) + 0.7 * g.x**3
    _, J = ops.linearize(g, u, p, q)
    J = J.toarray()
    eps = 1e-6
    for j in range(g.size):
        e = np.zeros(g.size)
        e[j] = eps
        col = (ops.linearize(g, u + e, p, q)[0] - ops.linearize(g, u - e, p, q)[0]) / (2 * eps)
        np.testing.assert_allclose(J[:, j], col, rtol=1e-5, atol=1e-5)


def test_jacobian_is_an_m_matrix_on_the_disc():
    g = build_grid("disc:1", 10)
    u = g.points[:, 0] ** 2 - 0.5 * g.points[:, 1]
    _, J = ops.linearize(g, u, 3, 4)
    J = J.toarray()
    off = J - np.diag(np.diag(J))
    assert off.max() <= 0
    assert np.all(J.sum(axis=1) >= -1e-9)


def test_wall_drive_lives_on_boundary_half_cells():
    g = build_grid("interval:0:2", 8)
    w = ops.wall_drive(g, 3, 5.0)
    assert np.all(w[g.interior] == 0)
    np.testing.assert_allclose(w[g.boundary], 25.0 / (0.5 * g.h))


@pytest.mark.parametrize("p,q", PAIRS)
def test_layer_profile_balances_diffusion_and_hamiltonian(p, q):
    # v(d) = -(M/beta) d^beta solves -(|v'|^(p-2) v')' + |v'|^q = 0 in d > 0
    d = sy.symbols("d", positive=True)
    beta = sy.Rational(q - p, q - p + 1)
    M = ((p - 1) * (1 - beta)) ** sy.Rational(1, q - p + 1)
    slope = M * d ** (beta - 1)                         # |v'|, with v' = -slope
    expr = -sy.diff(-(slope ** (p - 1)), d) + slope**q
    assert sy.simplify(expr) == 0
    h = 0.01
    assert ops.boundary_layer_gradient(h, p, q) == pytest.approx(float(slope.subs(d, h / 2)))


def test_spatial_residual_matches_vector_residual():
    g = build_grid("disc:1", 8)
    u = np.exp(g.points[:, 0])
    res = ops.residual(g, u, 3, 4, 0.5)
    fld = ops.Field(g, u)
    for i in (0, g.size // 2, int(g.boundary[0])):
        assert ops.spatial_residual(fld, i, 3, 4, 0.5) == pytest.approx(res[i])
