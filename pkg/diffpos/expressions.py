"""Vector fields given as expression strings.

Expressions may use ``+ - * /``, ``**`` or ``^`` for powers, ``pow`` and the
functions ``exp``, ``log``, ``tanh``, ``sin`` and ``cos``. Parameters are
substituted as constants before the Jacobian is derived symbolically.
"""
import keyword
import re
from typing import Callable, Mapping, Sequence, Tuple

import numpy as np
import sympy  # type: ignore
from sympy.core.function import AppliedUndef  # type: ignore
from sympy.parsing.sympy_parser import (convert_xor, parse_expr,  # type: ignore
                                        standard_transformations)
from tokenize import TokenError

from .exceptions import ConfigError

ALLOWED_FUNCTIONS = {"exp": sympy.exp, "log": sympy.log, "tanh": sympy.tanh,
                     "sin": sympy.sin, "cos": sympy.cos, "pow": sympy.Pow}
_ALLOWED_CHARACTERS = re.compile(r"^[\w\s+\-*/^().,]*$")
_TRANSFORMATIONS = standard_transformations + (convert_xor,)
_PARSER_GLOBALS = {"__builtins__": {}, "Symbol": sympy.Symbol, "Integer": sympy.Integer,
                   "Float": sympy.Float, "Rational": sympy.Rational,
                   "Function": sympy.Function}


def _check_name(name: str, what: str) -> None:
    if not name.isidentifier() or keyword.iskeyword(name) or name in ALLOWED_FUNCTIONS:
        raise ConfigError(f"Invalid {what} name {name!r}.")


def parse_expression(text: str, symbols: Mapping[str, sympy.Symbol],
                     parameters: Mapping[str, float]) -> sympy.Expr:
    """Parse one expression, allowing only the given symbols and functions.

    Examples:
        >>> x = sympy.Symbol("x")
        >>> parse_expression("-x + tanh(g*x)", {"x": x}, {"g": 2.0})
        -x + tanh(2.0*x)
    """
    if not isinstance(text, str) or not _ALLOWED_CHARACTERS.match(text) or "__" in text:
        raise ConfigError(f"Expression {text!r} contains unsupported characters.")
    local = {**ALLOWED_FUNCTIONS, **symbols,
             **{name: sympy.Float(value) for name, value in parameters.items()}}
    try:
        expression = parse_expr(text, local_dict=local, global_dict=dict(_PARSER_GLOBALS),
                                transformations=_TRANSFORMATIONS)
    except (SyntaxError, TokenError, TypeError, NameError, AttributeError) as error:
        raise ConfigError(f"Cannot parse expression {text!r}: {error}") from error
    expression = sympy.sympify(expression)
    unknown_functions = expression.atoms(AppliedUndef)
    if unknown_functions:
        raise ConfigError(f"Unsupported functions in {text!r}: "
                          f"{sorted(str(f.func) for f in unknown_functions)}.")
    unknown_symbols = expression.free_symbols - set(symbols.values())
    if unknown_symbols:
        raise ConfigError(f"Undefined names in {text!r}: {sorted(map(str, unknown_symbols))}.")
    return expression


def compile_field(variables: Sequence[str], equations: Sequence[str],
                  parameters: Mapping[str, float]
                  ) -> Tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]:
    """Compile equations into a numpy vector field and its symbolic Jacobian.

    Args:
        variables (:obj:`list` of str): state variable names, in chart order.
        equations (:obj:`list` of str): one right-hand side per variable.
        parameters (:obj:`dict` of (str, float)): named constants.

    Returns:
        tuple: ``(f, jacobian)``, both taking a coordinate array.

    Raises:
        ConfigError: for malformed names or expressions.
    """
    if not variables or len(variables) != len(equations):
        raise ConfigError("Need one equation per variable.")
    if len(set(variables)) != len(variables):
        raise ConfigError("Variable names must be unique.")
    for name in variables:
        _check_name(name, "variable")
    for name in parameters:
        _check_name(name, "parameter")
        if name in variables:
            raise ConfigError(f"Parameter {name!r} shadows a variable.")
    symbols = {name: sympy.Symbol(name, real=True) for name in variables}
    ordered = [symbols[name] for name in variables]
    expressions = [parse_expression(text, symbols, parameters) for text in equations]
    jacobian = sympy.Matrix(expressions).jacobian(ordered)
    field_function = sympy.lambdify([ordered], expressions, modules="numpy")
    jacobian_function = sympy.lambdify([ordered], jacobian, modules="numpy")
    n = len(variables)

    def f(x: np.ndarray) -> np.ndarray:
        return np.asarray(field_function(x), dtype=float).reshape(n)

    def jac(x: np.ndarray) -> np.ndarray:
        return np.asarray(jacobian_function(x), dtype=float).reshape(n, n)

    return f, jac
