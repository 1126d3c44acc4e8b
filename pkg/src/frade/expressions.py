"""Small arithmetic expression language for config-defined fields.

Coefficients, sources and manufactured solutions are written as
polynomial/trigonometric expressions over the grid coordinates, e.g.
``t*sin(pi*x)`` or ``x**2*(1-x)**2 + 0.5``.  Parsing goes through the
ast module with a strict whitelist (numbers, + - * / **, unary sign,
the functions below, names x, y, t, pi, e), so config files cannot
execute anything else.
"""

from __future__ import annotations

import ast
import math
from typing import Callable

import numpy as np

from .errors import ConfigError

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    # positive part; pos(w)**3 builds C^2 compactly supported bumps
    "pos": lambda v: np.maximum(v, 0.0),
}

_CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.UAdd, ast.USub)


def _validate(node: ast.AST, names: set[str], src: str) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, names, src)
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ConfigError(f"non-numeric constant in expression {src!r}")
    elif isinstance(node, ast.Name):
        if node.id not in names and node.id not in _CONSTANTS:
            raise ConfigError(f"unknown name {node.id!r} in expression {src!r}")
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ConfigError(f"operator not allowed in expression {src!r}")
        _validate(node.left, names, src)
        _validate(node.right, names, src)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _UNARYOPS):
            raise ConfigError(f"operator not allowed in expression {src!r}")
        _validate(node.operand, names, src)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ConfigError(f"only {sorted(_FUNCTIONS)} callable in {src!r}")
        if node.keywords or len(node.args) != 1:
            raise ConfigError(f"functions take one positional argument in {src!r}")
        _validate(node.args[0], names, src)
    else:
        raise ConfigError(
            f"unsupported syntax ({type(node).__name__}) in expression {src!r}"
        )


def compile_expression(src: str, dim: int,
                       time_dependent: bool = True) -> Callable:
    """Compile an expression over x[, y][, t] into a broadcasting callable.

    dim is the space dimension; the returned callable takes dim
    positional coordinate arrays plus the time array when
    time_dependent, matching the sampling interfaces of the solver.
    """
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim}")
    names = {"x"} | ({"y"} if dim == 2 else set())
    if time_dependent:
        names.add("t")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {src!r}: {exc.msg}") from exc
    _validate(tree, names, src)
    code = compile(tree, filename="<config>", mode="eval")
    env = dict(_FUNCTIONS, **_CONSTANTS)

    def fn(*coords):
        expected = dim + (1 if time_dependent else 0)
        if len(coords) != expected:
            raise ConfigError(
                f"expression {src!r} expects {expected} coordinate arrays"
            )
        local = {}
        if dim == 1:
            local["x"] = coords[0]
        else:
            local["x"], local["y"] = coords[0], coords[1]
        if time_dependent:
            local["t"] = coords[-1]
        out = eval(code, {"__builtins__": {}}, dict(env, **local))
        return np.asarray(out, dtype=float)

    fn.source = src
    return fn
