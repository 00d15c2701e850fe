import numpy as np
import pytest
from hypothesis import given, strategies as st

from vhjlab.expr import PRESETS, Expression, ExpressionError

PTS = np.array([[0.0, 0.0], [0.25, -0.5], [1.0, 2.0]])


@pytest.mark.parametrize("text, expected", [
    ("1", [1, 1, 1]),
    ("-x + 2*y", [0.0, -1.25, 3.0]),
    ("x^2", [0.0, 0.0625, 1.0]),
    ("abs(y)", [0.0, 0.5, 2.0]),
    ("cos(pi*x)", [1.0, np.cos(np.pi / 4), -1.0]),
])
def test_values(text, expected):
    np.testing.assert_allclose(Expression(text)(PTS, 0.0), expected, atol=1e-15)


def test_time_dependence():
    e = Expression("50*t")
    assert not e.time_independent
    np.testing.assert_allclose(e(PTS, 0.2), 10.0)
    assert Expression("sin(pi*x)").time_independent


@pytest.mark.parametrize("bad", ["__import__('os')", "x.real", "z + 1", "log(x)", "[x]",
                                 "x if t else y", "1 < 2", "", "sin", "f(x)", "x**"])
def test_rejects_outside_grammar(bad):
    with pytest.raises(ExpressionError):
        Expression(bad)


def test_presets_resolve():
    for name, text in PRESETS.items():
        assert Expression(name).text == text


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 2))
def test_scalar_kernel_matches_vector_path(x, y, t):
    e = Expression("exp(-x^2) * sin(3*y) + 2*t - abs(x - y)/4")
    vec = e(np.array([[x, y]]), t)[0]
    assert e.scalar_kernel(x, y, t) == pytest.approx(vec, rel=1e-13, abs=1e-13)
