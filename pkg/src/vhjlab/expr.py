"""Data expressions for configs: ``"50*t"``, ``"sin(pi*x)"``, ``"-1"``.

The grammar is deliberately small: numeric constants, the variables ``x``,
``y`` and ``t``, ``pi``, the functions ``sin cos exp abs``, the operators
``+ - * /`` and ``^`` for powers. Anything else is rejected before
evaluation; the checked tree is then compiled to an ordinary numpy function.
"""

from __future__ import annotations

import ast
from functools import cached_property

import numpy as np

FUNCTIONS = {"sin": "np.sin", "cos": "np.cos", "exp": "np.exp", "abs": "np.abs"}
VARIABLES = {"x", "y", "t"}
CONSTANTS = {"pi": "np.pi"}

PRESETS = {
    "zero": "0",
    "one": "1",
    "minus_one": "-1",
    "sin_pi_x": "sin(pi*x)",
    "ramp_50t": "50*t",
    "bump": "exp(-10*(x-0.5)^2)",
}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNOPS = (ast.UAdd, ast.USub)


class ExpressionError(ValueError):
    pass


class _Check(ast.NodeTransformer):
    def __init__(self):
        self.names: set[str] = set()

    def generic_visit(self, node):
        raise ExpressionError(f"unsupported syntax: {type(node).__name__}")

    def visit_Expression(self, node):
        node.body = self.visit(node.body)
        return node

    def visit_Constant(self, node):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported constant {node.value!r}")
        return node

    def visit_Name(self, node):
        if node.id in VARIABLES:
            self.names.add(node.id)
            return node
        if node.id in CONSTANTS:
            return ast.copy_location(ast.parse(CONSTANTS[node.id], mode="eval").body, node)
        raise ExpressionError(f"unknown name {node.id!r}")

    def visit_BinOp(self, node):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
        node.left = self.visit(node.left)
        node.right = self.visit(node.right)
        return node

    def visit_UnaryOp(self, node):
        if not isinstance(node.op, _UNOPS):
            raise ExpressionError(f"unsupported operator {type(node.op).__name__}")
        node.operand = self.visit(node.operand)
        return node

    def visit_Call(self, node):
        if not (isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS):
            raise ExpressionError("only sin, cos, exp and abs may be called")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        node.args = [self.visit(node.args[0])]
        node.func = ast.parse(FUNCTIONS[node.func.id], mode="eval").body
        return node


class Expression:
    """A checked expression, callable on ``(points, t)`` and returning nodal values."""

    def __init__(self, text: str | float | int):
        raw = str(text).strip()
        self.name = raw if raw in PRESETS else None
        self.text = PRESETS.get(raw, raw)
        if not self.text:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.text!r}: {exc.msg}") from None
        check = _Check()
        tree = ast.fix_missing_locations(check.visit(tree))
        self.variables = frozenset(check.names)
        self.source = f"def _expr(x, y, t):\n    return {ast.unparse(tree.body)}\n"
        scope = {"np": np}
        exec(compile(self.source, f"<expr {self.text}>", "exec"), scope)
        self._fn = scope["_expr"]

    @property
    def time_independent(self) -> bool:
        return "t" not in self.variables

    def __call__(self, points, t):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x = points[:, 0]
        y = points[:, 1] if points.shape[1] > 1 else np.zeros_like(x)
        with np.errstate(all="ignore"):
            out = self._fn(x, y, float(t))
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()

    @cached_property
    def scalar_kernel(self):
        """The same expression as a compiled scalar function ``(x, y, t) -> float``."""
        from numba import njit

        return njit(cache=False)(self._fn)

    def __repr__(self):
        return f"Expression({self.text!r})"


def parse(text) -> Expression:
    return Expression(text)
