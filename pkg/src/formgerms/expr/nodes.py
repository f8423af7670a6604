"""Expression trees over the coordinates x1..x4 and named rational parameters.

Nodes are frozen dataclasses, so two trees compare equal exactly when they
have the same shape.  Python operators build raw nodes without simplifying;
:mod:`formgerms.expr.calculus` has the folding constructors used by the
differentiator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator


class Expression:
    __slots__ = ()

    # operator sugar -------------------------------------------------------
    def __add__(self, other):
        return Add(self, as_expression(other))

    def __radd__(self, other):
        return Add(as_expression(other), self)

    def __sub__(self, other):
        return Sub(self, as_expression(other))

    def __rsub__(self, other):
        return Sub(as_expression(other), self)

    def __mul__(self, other):
        return Mul(self, as_expression(other))

    def __rmul__(self, other):
        return Mul(as_expression(other), self)

    def __truediv__(self, other):
        return Div(self, as_expression(other))

    def __rtruediv__(self, other):
        return Div(as_expression(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("expression powers must be integers")
        return Pow(self, n)

    def children(self) -> tuple["Expression", ...]:
        return ()

    def walk(self) -> Iterator["Expression"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children())

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=True, slots=True)
class Const(Expression):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, eq=True, slots=True)
class Var(Expression):
    index: int

    def __post_init__(self):
        if self.index not in (1, 2, 3, 4):
            raise ValueError(f"coordinate index must be 1..4, got {self.index}")


@dataclass(frozen=True, eq=True, slots=True)
class Param(Expression):
    name: str


@dataclass(frozen=True, eq=True, slots=True)
class _Binary(Expression):
    left: Expression
    right: Expression
    _hash: int = field(default=0, init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((type(self).__name__, self.left, self.right)))

    def __hash__(self):
        return self._hash

    def children(self):
        return (self.left, self.right)


class Add(_Binary):
    __slots__ = ()


class Sub(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


class Div(_Binary):
    __slots__ = ()


@dataclass(frozen=True, eq=True, slots=True)
class _Unary(Expression):
    arg: Expression
    _hash: int = field(default=0, init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((type(self).__name__, self.arg)))

    def __hash__(self):
        return self._hash

    def children(self):
        return (self.arg,)


class Neg(_Unary):
    __slots__ = ()


class Exp(_Unary):
    __slots__ = ()


class Ln(_Unary):
    __slots__ = ()


@dataclass(frozen=True, eq=True, slots=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or isinstance(self.exponent, bool):
            raise TypeError("Pow exponent must be a constant integer")

    def children(self):
        return (self.base,)


def as_expression(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, str):
        from .parser import parse_expression

        return parse_expression(value)
    return Const(Fraction(value))


def exp(e) -> Expression:
    return Exp(as_expression(e))


def ln(e) -> Expression:
    return Ln(as_expression(e))


X1, X2, X3, X4 = Var(1), Var(2), Var(3), Var(4)
ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def free_parameters(e: Expression) -> set[str]:
    return {n.name for n in e.walk() if isinstance(n, Param)}


def variables(e: Expression) -> set[int]:
    return {n.index for n in e.walk() if isinstance(n, Var)}


# ---------------------------------------------------------------------------
# printer

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2}
_SYM = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _rational_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _atom_text(e: Expression) -> str:
    """Text that parses back as a single ``atom``."""
    if isinstance(e, (Var, Param, Exp, Ln, Neg)):
        return to_text(e)
    if isinstance(e, Const):
        return _rational_text(e.value) if e.value >= 0 else to_text(e)
    return f"({to_text(e)})"


def to_text(e: Expression) -> str:
    """Render in the DSL; ``parse_expression(to_text(e)) == e`` for every tree."""
    if isinstance(e, Const):
        return _rational_text(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Exp):
        return f"exp({to_text(e.arg)})"
    if isinstance(e, Ln):
        return f"ln({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = e.arg
        # "-3" would read back as the literal Const(-3)
        if isinstance(inner, Const):
            return f"-({to_text(inner)})"
        return "-" + _atom_text(inner)
    if isinstance(e, Pow):
        return f"{_atom_text(e.base)}^{e.exponent}"
    if isinstance(e, _Binary):
        prec = _PREC[type(e)]
        left = to_text(e.left)
        if isinstance(e.left, _Binary) and _PREC[type(e.left)] < prec:
            left = f"({left})"
        right = to_text(e.right)
        if isinstance(e.right, _Binary) and _PREC[type(e.right)] <= prec:
            right = f"({right})"
        return f"{left} {_SYM[type(e)]} {right}"
    raise TypeError(f"not an expression node: {e!r}")
