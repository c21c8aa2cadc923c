import numpy as np
import pytest
import sympy

from diffpos.exceptions import ConfigError
from diffpos.expressions import compile_field, parse_expression


@pytest.mark.parametrize("text, value",
                         [("x^2 + 1", 5.0),
                          ("x**2 / 4", 1.0),
                          ("pow(x, 3) - 2*x", 4.0),
                          ("exp(0*x) + log(x)", 1.0 + np.log(2.0)),
                          ("tanh(k*x) - sin(x) + cos(x)", np.tanh(6.0) - np.sin(2.0) + np.cos(2.0))])
def test_parse_expression_values(text, value):
    x = sympy.Symbol("x")
    expression = parse_expression(text, {"x": x}, {"k": 3.0})
    assert float(expression.subs(x, 2.0)) == pytest.approx(value)


@pytest.mark.parametrize("text",
                         ["__import__('os')",
                          "x.__class__",
                          "open('file')",
                          "x + y",
                          "lambda: 1",
                          "x +* 2",
                          "x; 1",
                          "gamma(x)"])
def test_parse_expression_rejects(text):
    with pytest.raises(ConfigError):
        parse_expression(text, {"x": sympy.Symbol("x")}, {})


def test_compile_field_and_jacobian():
    f, jacobian = compile_field(["x", "y"], ["-x + tanh(g*y)", "-y + tanh(g*x)"], {"g": 2.0})
    state = np.array([0.3, -0.1])
    assert np.allclose(f(state), [-0.3 + np.tanh(-0.2), 0.1 + np.tanh(0.6)])
    expected = [[-1.0, 2.0 / np.cosh(-0.2) ** 2], [2.0 / np.cosh(0.6) ** 2, -1.0]]
    assert np.allclose(jacobian(state), expected)


def test_compile_field_constant_equation_has_full_shape():
    f, jacobian = compile_field(["x", "y"], ["1", "-y"], {})
    assert f(np.array([5.0, 2.0])).tolist() == [1.0, -2.0]
    assert jacobian(np.array([5.0, 2.0])).shape == (2, 2)


@pytest.mark.parametrize("variables, equations, parameters",
                         [(["x"], ["-x", "-x"], {}),
                          (["x", "x"], ["-x", "-x"], {}),
                          (["x-1"], ["-x"], {}),
                          (["exp"], ["-exp"], {}),
                          (["x"], ["-x*a"], {"x": 1.0}),
                          (["x"], ["-x*a"], {"class": 1.0}),
                          ([], [], {})])
def test_compile_field_rejects(variables, equations, parameters):
    with pytest.raises(ConfigError):
        compile_field(variables, equations, parameters)
