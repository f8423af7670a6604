"""Deciding whether an expression vanishes identically.

Expressions built from polynomials, rational constants and ``exp`` of
polynomials are brought to the normal form ``sum_k P_k(x) exp(Q_k(x))`` with
pairwise distinct polynomials ``Q_k``.  Such a sum vanishes identically iff
every ``P_k`` is the zero polynomial (exponentials of distinct polynomials are
linearly independent over the polynomial ring; for ``Q_k`` differing by a
rational constant this is the Lindemann-Weierstrass theorem), so the verdict
is exact.

Anything else (``ln``, division by non-monomial denominators, ``exp`` of a
non-polynomial) is sampled at random rational points.  A sample that is
certifiably nonzero returns ``NonZero`` with its witness; otherwise the verdict
is ``Unknown``, never ``Zero``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import mpmath

from ..errors import SingularError, UnboundParameterError
from .calculus import bind
from .nodes import free_parameters, Add, Const, Div, Exp, Expression, Ln, Mul, Neg, Param, Pow, Sub, Var

ZERO_VERDICT = "Zero"
NONZERO_VERDICT = "NonZero"
UNKNOWN_VERDICT = "Unknown"

DEFAULT_SAMPLES = 32
DEFAULT_SEED = 0


@dataclass(frozen=True)
class ZeroVerdict:
    status: str
    witness: tuple[Fraction, ...] | None = None
    method: str = "normal-form"

    @property
    def is_zero(self) -> bool:
        return self.status == ZERO_VERDICT

    @property
    def is_nonzero(self) -> bool:
        return self.status == NONZERO_VERDICT

    def __str__(self) -> str:
        if self.witness is None:
            return self.status
        return f"{self.status}({', '.join(str(w) for w in self.witness)})"


class _NotInClass(Exception):
    pass


# -- polynomial / poly-exp normal form ---------------------------------------

Poly = dict  # {exponent tuple: Fraction}, no zero entries
_ZERO_EXP = (0, 0, 0, 0)


def _poly_key(p: Poly) -> tuple:
    return tuple(sorted(p.items()))


def _poly_add(p: Poly, q: Poly, sign: int = 1) -> Poly:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + sign * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


class PolyExp:
    """``{key(Q): (Q, P)}`` standing for ``sum P * exp(Q)``."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = terms or {}

    @classmethod
    def poly(cls, p: Poly) -> "PolyExp":
        return cls({(): ({}, p)}) if p else cls()

    def is_polynomial(self) -> bool:
        return all(not q for q, _ in self.terms.values())

    def polynomial(self) -> Poly:
        if not self.is_polynomial():
            raise _NotInClass
        return next(iter(self.terms.values()))[1] if self.terms else {}

    def add(self, other: "PolyExp", sign: int = 1) -> "PolyExp":
        out = dict(self.terms)
        for k, (q, p) in other.terms.items():
            if k in out:
                merged = _poly_add(out[k][1], p, sign)
                if merged:
                    out[k] = (q, merged)
                else:
                    del out[k]
            else:
                out[k] = (q, p if sign == 1 else {m: -c for m, c in p.items()})
        return PolyExp(out)

    def mul(self, other: "PolyExp") -> "PolyExp":
        acc = PolyExp()
        for q1, p1 in self.terms.values():
            for q2, p2 in other.terms.values():
                q = _poly_add(q1, q2)
                p = _poly_mul(p1, p2)
                if p:
                    acc = acc.add(PolyExp({_poly_key(q): (q, p)}))
        return acc

    def is_zero(self) -> bool:
        return not self.terms


def poly_exp_normal_form(e: Expression) -> PolyExp:
    """Normal form, or raise ``_NotInClass`` when ``e`` leaves the poly-exp ring."""
    cache: dict[int, PolyExp] = {}

    def go(node) -> PolyExp:
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            out = PolyExp.poly({_ZERO_EXP: node.value} if node.value else {})
        elif isinstance(node, Var):
            m = [0, 0, 0, 0]
            m[node.index - 1] = 1
            out = PolyExp.poly({tuple(m): Fraction(1)})
        elif isinstance(node, Param):
            raise _NotInClass
        elif isinstance(node, Add):
            out = go(node.left).add(go(node.right))
        elif isinstance(node, Sub):
            out = go(node.left).add(go(node.right), -1)
        elif isinstance(node, Neg):
            out = PolyExp().add(go(node.arg), -1)
        elif isinstance(node, Mul):
            out = go(node.left).mul(go(node.right))
        elif isinstance(node, Div):
            out = go(node.left).mul(_invert(go(node.right)))
        elif isinstance(node, Pow):
            base = go(node.base)
            if node.exponent < 0:
                base = _invert(base)
            out = PolyExp.poly({_ZERO_EXP: Fraction(1)})
            for _ in range(abs(node.exponent)):
                out = out.mul(base)
        elif isinstance(node, Exp):
            arg = go(node.arg).polynomial()
            out = PolyExp({_poly_key(arg): (arg, {_ZERO_EXP: Fraction(1)})})
        elif isinstance(node, Ln):
            raise _NotInClass
        else:
            raise TypeError(f"not an expression node: {node!r}")
        cache[key] = out
        return out

    return go(e)


def _invert(pe: PolyExp) -> PolyExp:
    """Inverse of a single term ``c * exp(Q)`` with constant ``c``; otherwise out of class."""
    if len(pe.terms) != 1:
        raise _NotInClass
    q, p = next(iter(pe.terms.values()))
    if set(p) != {_ZERO_EXP}:
        raise _NotInClass
    qi = {m: -c for m, c in q.items()}
    return PolyExp({_poly_key(qi): (qi, {_ZERO_EXP: 1 / p[_ZERO_EXP]})})


def polynomial_terms(e: Expression) -> Poly:
    """``{exponents: Fraction}`` of a polynomial expression; ``ValueError`` otherwise."""
    try:
        return dict(poly_exp_normal_form(e).polynomial())
    except (_NotInClass, SingularError):
        raise ValueError(f"not a polynomial: {e}") from None


def polynomial_expression(poly: Poly) -> Expression:
    """Expression for ``poly`` as a sum of monomials in graded order."""
    from .calculus import add, mul, power

    out: Expression = Const(Fraction(0))
    for m in sorted(poly, key=lambda m: (sum(m), tuple(-x for x in m))):
        term: Expression = Const(Fraction(poly[m]))
        for i, k in enumerate(m):
            if k:
                term = mul(term, power(Var(i + 1), k))
        out = add(out, term)
    return out


# -- sampling -----------------------------------------------------------------


def _has_transcendental(e: Expression) -> bool:
    return any(isinstance(n, (Exp, Ln)) for n in e.walk())


def _eval_exact(e: Expression, point) -> Fraction:
    cache: dict[int, Fraction] = {}

    def go(node):
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            out = node.value
        elif isinstance(node, Var):
            out = point[node.index - 1]
        elif isinstance(node, Add):
            out = go(node.left) + go(node.right)
        elif isinstance(node, Sub):
            out = go(node.left) - go(node.right)
        elif isinstance(node, Mul):
            out = go(node.left) * go(node.right)
        elif isinstance(node, Div):
            den = go(node.right)
            if den == 0:
                raise SingularError("division by zero")
            out = go(node.left) / den
        elif isinstance(node, Neg):
            out = -go(node.arg)
        elif isinstance(node, Pow):
            b = go(node.base)
            if b == 0 and node.exponent < 0:
                raise SingularError("division by zero")
            out = b**node.exponent
        else:
            raise TypeError(f"cannot evaluate {node!r} exactly")
        cache[key] = out
        return out

    return go(e)


def _eval_interval(e: Expression, point):
    iv = mpmath.iv
    cache: dict[int, object] = {}

    def go(node):
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            out = iv.mpf(node.value.numerator) / node.value.denominator
        elif isinstance(node, Var):
            p = point[node.index - 1]
            out = iv.mpf(p.numerator) / p.denominator
        elif isinstance(node, Add):
            out = go(node.left) + go(node.right)
        elif isinstance(node, Sub):
            out = go(node.left) - go(node.right)
        elif isinstance(node, Mul):
            out = go(node.left) * go(node.right)
        elif isinstance(node, Div):
            den = go(node.right)
            if 0 in den:
                raise SingularError("denominator interval contains zero")
            out = go(node.left) / den
        elif isinstance(node, Neg):
            out = -go(node.arg)
        elif isinstance(node, Pow):
            b = go(node.base)
            if node.exponent < 0 and 0 in b:
                raise SingularError("denominator interval contains zero")
            out = b**node.exponent
        elif isinstance(node, Exp):
            out = iv.exp(go(node.arg))
        elif isinstance(node, Ln):
            a = go(node.arg)
            if a.a <= 0:
                raise SingularError("ln argument not certifiably positive")
            out = iv.log(a)
        else:
            raise TypeError(f"cannot evaluate {node!r}")
        cache[key] = out
        return out

    saved = iv.prec
    iv.prec = 200
    try:
        return go(e)
    finally:
        iv.prec = saved


def _random_point(rng: random.Random) -> tuple[Fraction, ...]:
    return tuple(Fraction(rng.randint(-64, 64), 128) for _ in range(4))


def is_zero(
    e: Expression,
    bindings: Mapping[str, object] | None = None,
    samples: int = DEFAULT_SAMPLES,
    rng: random.Random | None = None,
    seed: int = DEFAULT_SEED,
) -> ZeroVerdict:
    """Decide ``e == 0`` identically.

    Returns ``Zero`` only for the exactly decidable poly-exp class, ``NonZero``
    with a witness point whenever one is found, and ``Unknown`` otherwise.
    ``rng`` is caller-owned; when omitted a fresh ``random.Random(seed)`` is used.
    """
    e = bind(e, bindings)
    unbound = free_parameters(e)
    if unbound:
        raise UnboundParameterError(sorted(unbound)[0])
    try:
        nf = poly_exp_normal_form(e)
    except (_NotInClass, SingularError):
        nf = None
    rng = rng if rng is not None else random.Random(seed)
    if nf is not None and nf.is_zero():
        return ZeroVerdict(ZERO_VERDICT)
    exact = not _has_transcendental(e)
    for _ in range(samples):
        pt = _random_point(rng)
        try:
            if exact:
                if _eval_exact(e, pt) != 0:
                    return ZeroVerdict(NONZERO_VERDICT, pt, "sampling")
            else:
                val = _eval_interval(e, pt)
                if 0 not in val:
                    return ZeroVerdict(NONZERO_VERDICT, pt, "sampling")
        except (SingularError, ZeroDivisionError, ValueError):
            continue
    if nf is not None:
        # nonzero normal form: exactly nonzero even if no sample separated it
        return ZeroVerdict(NONZERO_VERDICT, None, "normal-form")
    return ZeroVerdict(UNKNOWN_VERDICT, None, "sampling")
