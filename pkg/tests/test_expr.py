import numpy as np
import pytest

from fvlinf.expr import ExpressionError, compile_expr


@pytest.mark.parametrize("text,expected", [
    ("1 + 2*x - y/4", 1 + 2 * 0.3 - 0.7 / 4),
    ("x**2 + -y", 0.09 - 0.7),
    ("sin(pi*x)*cos(y) + exp(abs(-x))", np.sin(np.pi * 0.3) * np.cos(0.7) + np.exp(0.3)),
    ("max(x, y, 0.5) - min(x, 0)", 0.7 - 0.0),
    ("2.5", 2.5),
])
def test_values(text, expected):
    assert float(compile_expr(text)(0.3, 0.7)) == pytest.approx(expected, rel=1e-15)


def test_vectorized_and_constant_broadcast():
    x = np.linspace(0, 1, 5)
    assert compile_expr("3")(x, x).shape == (5,)
    np.testing.assert_allclose(compile_expr("x*y")(x, x), x * x)


@pytest.mark.parametrize("text", ["__import__('os')", "x.real", "z + 1", "sqrt(x)", "max(x)", "sin(x, y)",
                                  "x if y else 1", "[x]", "1 +", "True", "lambda: 1"])
def test_rejected(text):
    with pytest.raises(ExpressionError):
        compile_expr(text)
