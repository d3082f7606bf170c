"""A small arithmetic grammar for coefficient fields in ``x`` and ``y``.

Supported: numbers, ``x``, ``y``, ``pi``, ``+ - * / **``, unary minus and
the functions ``sin cos exp abs min max`` (``min``/``max`` are elementwise
and take two or more arguments).  Everything evaluates on numpy arrays.

>>> f = compile_expr("max(x, 0.5) * 2")
>>> float(f(0.25, 0.0))
1.0
"""
from __future__ import annotations

import ast
import functools
import operator

import numpy as np


class ExpressionError(ValueError):
    pass


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {
    "sin": (np.sin, 1), "cos": (np.cos, 1), "exp": (np.exp, 1), "abs": (np.abs, 1),
    "min": (lambda *a: functools.reduce(np.minimum, a), None),
    "max": (lambda *a: functools.reduce(np.maximum, a), None),
}
_CONSTS = {"pi": np.pi}


def _build(node, text):
    if isinstance(node, ast.Expression):
        return _build(node.body, text)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        c = float(node.value)
        return lambda x, y: c
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x, y: x
        if node.id == "y":
            return lambda x, y: y
        if node.id in _CONSTS:
            c = _CONSTS[node.id]
            return lambda x, y: c
        raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op, lhs, rhs = _BINOPS[type(node.op)], _build(node.left, text), _build(node.right, text)
        return lambda x, y: op(lhs(x, y), rhs(x, y))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op, arg = _UNARY[type(node.op)], _build(node.operand, text)
        return lambda x, y: op(arg(x, y))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name not in _FUNCS:
            raise ExpressionError(f"unknown function {name!r} in {text!r}")
        fn, arity = _FUNCS[name]
        nargs = len(node.args)
        if (arity is not None and nargs != arity) or (arity is None and nargs < 2):
            raise ExpressionError(f"wrong number of arguments to {name}() in {text!r}")
        args = [_build(a, text) for a in node.args]
        return lambda x, y: fn(*(a(x, y) for a in args))
    raise ExpressionError(f"unsupported syntax in {text!r}: {ast.dump(node)[:60]}")


def compile_expr(text: str):
    """Compile ``text`` into a vectorized callable ``f(x, y)``."""
    if not isinstance(text, str):
        text = repr(float(text))
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    fn = _build(tree, text)

    def field(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(fn(x, y), dtype=float), np.broadcast(x, y).shape).copy()

    field.source = text
    return field
