"""Differentiation, substitution and jet evaluation of expressions."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from ..errors import SingularError, UnboundParameterError
from ..jets import EXACT, TruncatedSeries, coordinate_series, to_scalar
from .nodes import (
    ONE,
    ZERO,
    Add,
    Const,
    Div,
    Exp,
    Expression,
    Ln,
    Mul,
    Neg,
    Param,
    Pow,
    Sub,
    Var,
    as_expression,
)

Binding = Mapping[str, object]


# -- folding constructors ---------------------------------------------------


def _is_const(e, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    if a == b:
        return ZERO
    return Sub(a, b)


def neg(a: Expression) -> Expression:
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return neg(b)
    if _is_const(b, -1):
        return neg(a)
    return Mul(a, b)


def div(a: Expression, b: Expression) -> Expression:
    if _is_const(b, 0):
        raise SingularError("division by the constant 0")
    if _is_const(a) and _is_const(b):
        return Const(a.value / b.value)
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    return Div(a, b)


def power(a: Expression, n: int) -> Expression:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if _is_const(a) and (n > 0 or a.value != 0):
        return Const(a.value**n)
    return Pow(a, n)


# -- differentiation --------------------------------------------------------


def symbolic_derive(e: Expression, axis: int) -> Expression:
    """Exact partial derivative along ``x_axis`` with constant folding."""
    if axis not in (1, 2, 3, 4):
        raise ValueError(f"axis must be 1..4, got {axis}")
    cache: dict[int, Expression] = {}

    def d(node: Expression) -> Expression:
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, (Const, Param)):
            out = ZERO
        elif isinstance(node, Var):
            out = ONE if node.index == axis else ZERO
        elif isinstance(node, Add):
            out = add(d(node.left), d(node.right))
        elif isinstance(node, Sub):
            out = sub(d(node.left), d(node.right))
        elif isinstance(node, Neg):
            out = neg(d(node.arg))
        elif isinstance(node, Mul):
            out = add(mul(d(node.left), node.right), mul(node.left, d(node.right)))
        elif isinstance(node, Div):
            du, dv = d(node.left), d(node.right)
            if _is_const(dv, 0):
                out = div(du, node.right)
            else:
                out = div(sub(mul(du, node.right), mul(node.left, dv)), power(node.right, 2))
        elif isinstance(node, Pow):
            db = d(node.base)
            n = node.exponent
            out = mul(mul(Const(n), power(node.base, n - 1)), db) if not _is_const(db, 0) else ZERO
        elif isinstance(node, Exp):
            out = mul(d(node.arg), node)
        elif isinstance(node, Ln):
            out = div(d(node.arg), node.arg)
        else:
            raise TypeError(f"not an expression node: {node!r}")
        cache[key] = out
        return out

    return d(e)


def derive_multi(e: Expression, axes: Sequence[int]) -> Expression:
    for a in axes:
        e = symbolic_derive(e, a)
    return e


# -- substitution -----------------------------------------------------------


def _map_tree(e: Expression, leaf) -> Expression:
    cache: dict[int, Expression] = {}

    def go(node):
        key = id(node)
        if key in cache:
            return cache[key]
        rep = leaf(node)
        if rep is not None:
            out = rep
        elif isinstance(node, (Add, Sub, Mul, Div)):
            out = type(node)(go(node.left), go(node.right))
        elif isinstance(node, (Neg, Exp, Ln)):
            out = type(node)(go(node.arg))
        elif isinstance(node, Pow):
            out = Pow(go(node.base), node.exponent)
        else:
            out = node
        cache[key] = out
        return out

    return go(e)


def bind(e: Expression, bindings: Binding | None) -> Expression:
    """Replace bound parameters by rational constants."""
    if not bindings:
        return e
    values = {k: Const(Fraction(v) if not isinstance(v, str) else Fraction(v)) for k, v in bindings.items()}
    return _map_tree(e, lambda n: values.get(n.name) if isinstance(n, Param) else None)


def substitute(e: Expression, mapping: Mapping[int, Expression]) -> Expression:
    """Replace coordinates ``x_i`` by expressions (simultaneously)."""
    mapping = {k: as_expression(v) for k, v in mapping.items()}
    return _map_tree(e, lambda n: mapping.get(n.index) if isinstance(n, Var) else None)


# -- evaluation -------------------------------------------------------------


def eval_series(
    e: Expression,
    inputs: Sequence[TruncatedSeries],
    bindings: Binding | None = None,
) -> TruncatedSeries:
    """Evaluate ``e`` with ``x_i`` replaced by the series ``inputs[i-1]``."""
    backend = inputs[0].backend
    order = min(s.order for s in inputs)
    bindings = bindings or {}
    cache: dict[int, TruncatedSeries] = {}

    def const(v):
        return TruncatedSeries.constant(to_scalar(v, backend), order, backend)

    def go(node) -> TruncatedSeries:
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            out = const(node.value)
        elif isinstance(node, Var):
            out = inputs[node.index - 1]
        elif isinstance(node, Param):
            if node.name not in bindings:
                raise UnboundParameterError(node.name)
            v = bindings[node.name]
            out = const(Fraction(v) if isinstance(v, str) else v)
        elif isinstance(node, Add):
            out = go(node.left) + go(node.right)
        elif isinstance(node, Sub):
            out = go(node.left) - go(node.right)
        elif isinstance(node, Mul):
            out = go(node.left) * go(node.right)
        elif isinstance(node, Div):
            den = go(node.right)
            if den.value == 0:
                raise SingularError(f"division by an expression vanishing at the point: {node.right}")
            out = go(node.left) * den.reciprocal()
        elif isinstance(node, Neg):
            out = -go(node.arg)
        elif isinstance(node, Pow):
            base = go(node.base)
            if node.exponent < 0 and base.value == 0:
                raise SingularError(f"negative power of an expression vanishing at the point: {node.base}")
            out = base**node.exponent
        elif isinstance(node, Exp) and isinstance(node.arg, Ln):
            # exp(ln u) = u wherever ln u is defined; avoids an irrational ln
            out = go(node.arg.arg)
            if not float(out.value) > 0:
                raise SingularError(f"ln of a non-positive value: {node.arg.arg}")
        elif isinstance(node, Exp):
            out = go(node.arg).exp()
        elif isinstance(node, Ln):
            out = go(node.arg).log()
        else:
            raise TypeError(f"not an expression node: {node!r}")
        cache[key] = out
        return out

    return go(e)


def eval_jet(
    e: Expression,
    point: Sequence = (0, 0, 0, 0),
    order: int = 2,
    bindings: Binding | None = None,
    backend: str = EXACT,
) -> TruncatedSeries:
    """Taylor expansion of ``e`` about ``point`` truncated at total degree ``order``."""
    e = as_expression(e)
    return eval_series(e, coordinate_series(order, backend, point), bindings)


def evaluate(e: Expression, point: Sequence, bindings: Binding | None = None, backend: str = EXACT):
    """Value of ``e`` at ``point`` as a backend scalar."""
    return eval_jet(e, point, 0, bindings, backend).value
