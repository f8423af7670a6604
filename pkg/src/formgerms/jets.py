"""Truncated power series in four variables.

A :class:`TruncatedSeries` is the Taylor polynomial of a function about some
expansion point, kept up to a total-degree cap (its *order*).  Coefficients are
stored densely, one per exponent tuple, in graded order: all monomials of
degree 0, then degree 1, and so on.  Because of that layout a series of order
``D`` truncates to order ``D' < D`` by slicing a prefix.

Two scalar backends are supported:

``"exact"``
    ``gmpy2.mpq`` rationals.  Arithmetic is exact, so every identity checked on
    this backend holds bit for bit.  Operations that would produce an
    irrational number (``exp`` of a nonzero constant term, ``ln`` of a constant
    term other than 1) raise :class:`~formgerms.errors.TranscendenceError`.

``"exact-exp"``
    Like ``"exact"``, but constants may also be finite sums ``sum c_k exp(q_k)``
    with rational ``c_k`` and pairwise distinct rational ``q_k`` (see
    :class:`ExpSum`).  Such a sum is zero only when every ``c_k`` is zero
    (Lindemann-Weierstrass), so zero tests stay exact.  Division is limited to
    units ``c exp(q)``; anything else raises ``TranscendenceError``.  This is
    what lets exact computations run at points where an exponent does not
    vanish.

``"float"``
    IEEE doubles in ``numpy.float64`` arrays.

Products are computed with precomputed index tables and ``numpy.add.reduceat``,
which keeps the Python-level loop count independent of the number of terms.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from math import comb
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq

from .errors import BackendMismatchError, OrderBudgetError, SingularError, TranscendenceError

EXACT = "exact"
EXACT_EXP = "exact-exp"
FLOAT = "float"
BACKENDS = (EXACT, EXACT_EXP, FLOAT)
NVARS = 4
MAX_ORDER = 12

_MPQ = type(mpq(0))


# ---------------------------------------------------------------------------
# scalars


class ExpSum:
    """``sum_k c_k exp(q_k)`` with rational ``c_k != 0`` and distinct rational ``q_k``.

    Values with only the ``q = 0`` term are returned as plain ``mpq`` by
    :meth:`make`, so an ``ExpSum`` instance always has a transcendental part.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: tuple):
        self.terms = terms
        self._hash = hash(terms)

    @staticmethod
    def make(mapping: Mapping) -> object:
        items = tuple(sorted((mpq(q), mpq(c)) for q, c in mapping.items() if c != 0))
        if not items:
            return mpq(0)
        if len(items) == 1 and items[0][0] == 0:
            return items[0][1]
        return ExpSum(items)

    @staticmethod
    def exp_of(q) -> object:
        """``exp(q)`` for rational ``q``."""
        return ExpSum.make({q: 1})

    @staticmethod
    def _terms(x) -> dict:
        if isinstance(x, ExpSum):
            return dict(x.terms)
        if isinstance(x, _MPQ) or isinstance(x, (int, Fraction)):
            return {mpq(0): mpq(x)} if x != 0 else {}
        return None

    def __add__(self, other):
        b = ExpSum._terms(other)
        if b is None:
            return NotImplemented
        out = dict(self.terms)
        for q, c in b.items():
            out[q] = out.get(q, 0) + c
        return ExpSum.make(out)

    __radd__ = __add__

    def __neg__(self):
        return ExpSum(tuple((q, -c) for q, c in self.terms))

    def __sub__(self, other):
        b = ExpSum._terms(other)
        if b is None:
            return NotImplemented
        out = dict(self.terms)
        for q, c in b.items():
            out[q] = out.get(q, 0) - c
        return ExpSum.make(out)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        b = ExpSum._terms(other)
        if b is None:
            return NotImplemented
        out: dict = {}
        for q1, c1 in self.terms:
            for q2, c2 in b.items():
                out[q1 + q2] = out.get(q1 + q2, 0) + c1 * c2
        return ExpSum.make(out)

    __rmul__ = __mul__

    def is_unit(self) -> bool:
        return len(self.terms) == 1

    def inverse(self):
        if not self.is_unit():
            raise TranscendenceError(f"division by the non-monomial exponential sum {format_scalar(self)}")
        q, c = self.terms[0]
        return ExpSum.make({-q: 1 / c})

    def __truediv__(self, other):
        if isinstance(other, ExpSum):
            return self * other.inverse()
        if other == 0:
            raise ZeroDivisionError("division of an exponential sum by zero")
        return self * (1 / mpq(other))

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __eq__(self, other):
        if isinstance(other, ExpSum):
            return self.terms == other.terms
        return False if ExpSum._terms(other) is not None else NotImplemented

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        return self._hash

    def __bool__(self):
        return True

    def __float__(self):
        return float(sum(float(c) * math.exp(float(q)) for q, c in self.terms))

    def __abs__(self):
        return abs(float(self))

    def __repr__(self):
        return f"ExpSum({format_scalar(self)})"


def check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return backend


def to_scalar(value, backend: str):
    """Coerce ``value`` to the scalar type of ``backend``.

    The exact backend accepts integers, rationals (``Fraction``, ``mpq``) and
    strings such as ``"3/4"``; floats are refused so that inexact data never
    leaks into an exact computation.
    """
    if backend == EXACT_EXP and isinstance(value, ExpSum):
        return value
    if backend in (EXACT, EXACT_EXP):
        if isinstance(value, _MPQ):
            return value
        if isinstance(value, bool):
            return mpq(int(value))
        if isinstance(value, (int, Fraction)) or isinstance(value, Rational):
            return mpq(value.numerator, value.denominator)
        if isinstance(value, str):
            return mpq(Fraction(value.strip()))
        if isinstance(value, type(gmpy2.mpz(0))):
            return mpq(value)
        raise TypeError(f"cannot use {type(value).__name__} {value!r} on the exact backend")
    if backend == FLOAT:
        if isinstance(value, str):
            return float(Fraction(value.strip()))
        return float(value)
    check_backend(backend)


def scalar_backend(value) -> str | None:
    if isinstance(value, ExpSum):
        return EXACT_EXP
    if isinstance(value, _MPQ):
        return EXACT
    if isinstance(value, (float, np.floating)):
        return FLOAT
    return None


def format_scalar(value) -> str:
    """Locale-independent text form: ``"p/q"`` for rationals, ``repr`` for floats."""
    if isinstance(value, _MPQ):
        return str(value)
    if isinstance(value, ExpSum):
        # DSL text, e.g. "3/4*exp(1/2) - exp(-2)"
        out = ""
        for q, c in value.terms:
            mag = abs(c)
            body = str(mag) if q == 0 else (f"exp({q})" if mag == 1 else f"{mag}*exp({q})")
            if not out:
                out = ("-" if c < 0 else "") + body
            else:
                out += (" - " if c < 0 else " + ") + body
        return out
    if isinstance(value, (Fraction, int)):
        return str(Fraction(value))
    return repr(float(value))


def scalar_is_zero(value, backend: str, scale: float = 1.0, rtol: float = 1e-9) -> bool:
    """Zero test under the package-wide policy: exact on ``exact``, relative on ``float``."""
    if backend != FLOAT:
        return value == 0
    return abs(float(value)) <= rtol * max(abs(scale), 1.0)


def to_fraction(value) -> Fraction:
    if isinstance(value, _MPQ):
        return Fraction(int(value.numerator), int(value.denominator))
    return Fraction(value)


# ---------------------------------------------------------------------------
# monomial bookkeeping


def n_coeffs(order: int) -> int:
    """Number of monomials of total degree <= ``order`` in four variables."""
    return comb(order + NVARS, NVARS) if order >= 0 else 0


def block_bounds(degree: int) -> tuple[int, int]:
    return n_coeffs(degree - 1), n_coeffs(degree)


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


@lru_cache(maxsize=None)
def monomials(order: int) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples of degree <= order in graded order (lex-descending within a degree)."""
    out: list[tuple[int, ...]] = []
    for d in range(order + 1):
        out.extend(_compositions(d, NVARS))
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(order: int) -> dict[tuple[int, ...], int]:
    return {m: i for i, m in enumerate(monomials(order))}


def _reduce_table(I, J, K):
    I = np.asarray(I, dtype=np.intp)
    J = np.asarray(J, dtype=np.intp)
    K = np.asarray(K, dtype=np.intp)
    perm = np.argsort(K, kind="stable")
    I, J, K = I[perm], J[perm], K[perm]
    starts = np.flatnonzero(np.r_[True, K[1:] != K[:-1]]) if len(K) else np.zeros(0, np.intp)
    return I, J, starts


@lru_cache(maxsize=None)
def _product_table(order: int):
    mons = monomials(order)
    idx = monomial_index(order)
    I, J, K = [], [], []
    for i, a in enumerate(mons):
        room = order - sum(a)
        for j in range(n_coeffs(room)):
            b = mons[j]
            I.append(i)
            J.append(j)
            K.append(idx[tuple(p + q for p, q in zip(a, b))])
    return _reduce_table(I, J, K)


@lru_cache(maxsize=None)
def _block_table(dl: int, dr: int):
    """Index table for (degree-dl block) x (degree-dr block) -> degree dl+dr block."""
    top = dl + dr
    mons = monomials(top)
    idx = monomial_index(top)
    lo_l, hi_l = block_bounds(dl)
    lo_r, hi_r = block_bounds(dr)
    lo_t, _ = block_bounds(top)
    I, J, K = [], [], []
    for i in range(lo_l, hi_l):
        for j in range(lo_r, hi_r):
            I.append(i - lo_l)
            J.append(j - lo_r)
            K.append(idx[tuple(p + q for p, q in zip(mons[i], mons[j]))] - lo_t)
    return _reduce_table(I, J, K)


@lru_cache(maxsize=None)
def _derive_table(order: int, axis: int):
    src, dst, fac = [], [], []
    lower = monomial_index(order - 1)
    for i, m in enumerate(monomials(order)):
        if m[axis] > 0:
            t = list(m)
            t[axis] -= 1
            src.append(i)
            dst.append(lower[tuple(t)])
            fac.append(m[axis])
    return np.asarray(src, np.intp), np.asarray(dst, np.intp), fac


@lru_cache(maxsize=None)
def _degrees(order: int) -> np.ndarray:
    return np.asarray([sum(m) for m in monomials(order)], dtype=np.intp)


# ---------------------------------------------------------------------------
# raw coefficient-array kernels (same order, same backend, no checks)


def is_exact(backend: str) -> bool:
    return backend != FLOAT


def _zeros(n: int, backend: str) -> np.ndarray:
    if backend != FLOAT:
        out = np.empty(n, dtype=object)
        out[:] = [mpq(0)] * n
        return out
    return np.zeros(n, dtype=np.float64)


def _raw_mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    I, J, starts = _product_table(order)
    return np.add.reduceat(a[I] * b[J], starts)


def _block_mul(a: np.ndarray, b: np.ndarray, dl: int, dr: int) -> np.ndarray:
    """Degree dl+dr block of the product of a degree-dl block and a degree-dr block."""
    I, J, starts = _block_table(dl, dr)
    return np.add.reduceat(a[I] * b[J], starts)


def _pad(a: np.ndarray, order: int, backend: str) -> np.ndarray:
    n = n_coeffs(order)
    if len(a) >= n:
        return a[:n]
    out = _zeros(n, backend)
    out[: len(a)] = a
    return out


# ---------------------------------------------------------------------------


def _check_order(order: int) -> None:
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 0..{MAX_ORDER}, got {order}")


class TruncatedSeries:
    """Immutable Taylor polynomial in ``x1..x4`` truncated at total degree ``order``.

    Variables are addressed by axis ``1..4`` in the public API.  Arithmetic
    with plain numbers promotes them to constant series; arithmetic between
    series of different backends raises :class:`BackendMismatchError`.  The
    result of a binary operation carries the smaller of the two orders.
    """

    __slots__ = ("backend", "order", "coeffs")

    def __init__(self, coeffs, order: int, backend: str = EXACT):
        check_backend(backend)
        _check_order(order)
        n = n_coeffs(order)
        if backend != FLOAT:
            arr = np.empty(n, dtype=object)
            vals = list(coeffs)
            if len(vals) != n:
                raise ValueError(f"expected {n} coefficients for order {order}, got {len(vals)}")
            arr[:] = [to_scalar(v, backend) for v in vals]
        else:
            arr = np.array(coeffs, dtype=np.float64)
            if arr.shape != (n,):
                raise ValueError(f"expected {n} coefficients for order {order}, got {arr.shape}")
        arr.flags.writeable = False
        self.backend = backend
        self.order = order
        self.coeffs = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray, order: int, backend: str) -> "TruncatedSeries":
        obj = cls.__new__(cls)
        arr.flags.writeable = False
        obj.backend = backend
        obj.order = order
        obj.coeffs = arr
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value, order: int, backend: str = EXACT) -> "TruncatedSeries":
        _check_order(order)
        arr = _zeros(n_coeffs(order), backend)
        arr[0] = to_scalar(value, backend)
        return cls._wrap(arr, order, backend)

    @classmethod
    def zero(cls, order: int, backend: str = EXACT) -> "TruncatedSeries":
        _check_order(order)
        return cls._wrap(_zeros(n_coeffs(order), backend), order, backend)

    @classmethod
    def variable(cls, axis: int, order: int, backend: str = EXACT, offset=0) -> "TruncatedSeries":
        """The series of ``offset + x_axis`` (the coordinate recentred at the point)."""
        _check_order(order)
        arr = _zeros(n_coeffs(order), backend)
        arr[0] = to_scalar(offset, backend)
        if order >= 1:
            arr[axis] = to_scalar(1, backend)
        return cls._wrap(arr, order, backend)

    @classmethod
    def from_dict(
        cls, terms: Mapping[Sequence[int], object], order: int, backend: str = EXACT
    ) -> "TruncatedSeries":
        """Build from ``{exponents: coefficient}``; terms above ``order`` are dropped."""
        _check_order(order)
        arr = _zeros(n_coeffs(order), backend)
        idx = monomial_index(order)
        for exps, c in terms.items():
            exps = tuple(exps)
            if len(exps) != NVARS:
                raise ValueError(f"exponent tuple {exps} must have {NVARS} entries")
            if sum(exps) <= order:
                arr[idx[exps]] = arr[idx[exps]] + to_scalar(c, backend)
        return cls._wrap(arr, order, backend)

    # -- inspection ---------------------------------------------------------

    @property
    def value(self):
        """Constant term, i.e. the value of the function at the expansion point."""
        return self.coeffs[0]

    def __getitem__(self, exps: Sequence[int]):
        exps = tuple(exps)
        if sum(exps) > self.order:
            raise KeyError(f"monomial {exps} exceeds order {self.order}")
        return self.coeffs[monomial_index(self.order)[exps]]

    def to_dict(self) -> dict[tuple[int, ...], object]:
        """Nonzero terms as ``{exponents: coefficient}``."""
        return {m: c for m, c in zip(monomials(self.order), self.coeffs) if c != 0}

    def block(self, degree: int) -> np.ndarray:
        lo, hi = block_bounds(degree)
        return self.coeffs[lo:hi]

    def is_zero(self) -> bool:
        return not any(c != 0 for c in self.coeffs)

    def max_abs(self) -> float:
        if len(self.coeffs) == 0:
            return 0.0
        return max(abs(float(c)) for c in self.coeffs)

    def derivative_at(self, exps: Sequence[int]):
        """Partial derivative value at the point for multi-index ``exps``."""
        c = self[exps]
        k = 1
        for e in exps:
            k *= math.factorial(e)
        return c * k

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (
            self.backend == other.backend
            and self.order == other.order
            and all(a == b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __hash__(self):
        return hash((self.backend, self.order, tuple(self.coeffs)))

    def __repr__(self) -> str:
        return f"TruncatedSeries({self.to_polynomial_string()}, order={self.order}, backend={self.backend!r})"

    def to_polynomial_string(self) -> str:
        parts = []
        for m, c in self.to_dict().items():
            mon = "*".join(
                f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}" for i, e in enumerate(m) if e
            )
            coeff = format_scalar(c)
            parts.append(coeff if not mon else (mon if coeff == "1" else f"{coeff}*{mon}"))
        return " + ".join(parts) if parts else "0"

    # -- conversions --------------------------------------------------------

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise ValueError(f"cannot raise order {self.order} to {order}")
        if order == self.order:
            return self
        return TruncatedSeries._wrap(self.coeffs[: n_coeffs(order)].copy(), order, self.backend)

    def to_backend(self, backend: str) -> "TruncatedSeries":
        """Re-tag an exact series; ``exact`` -> ``exact-exp`` is lossless, ``float`` rounds."""
        if backend == self.backend:
            return self
        if backend == FLOAT:
            return self.to_float()
        if self.backend == FLOAT:
            raise BackendMismatchError("cannot convert a float series to an exact backend")
        if backend == EXACT and any(isinstance(c, ExpSum) for c in self.coeffs):
            raise TranscendenceError("series has transcendental coefficients")
        return TruncatedSeries._wrap(self.coeffs.copy(), self.order, backend)

    def to_float(self) -> "TruncatedSeries":
        if self.backend == FLOAT:
            return self
        return TruncatedSeries._wrap(
            np.array([float(c) for c in self.coeffs], dtype=np.float64), self.order, FLOAT
        )

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            if other.backend != self.backend:
                raise BackendMismatchError(
                    f"cannot combine {self.backend} and {other.backend} series"
                )
            return other
        sb = scalar_backend(other)
        if sb is not None and sb != self.backend and not (sb == EXACT and self.backend == EXACT_EXP):
            raise BackendMismatchError(f"cannot combine {self.backend} series with {sb} scalar")
        return TruncatedSeries.constant(other, self.order, self.backend)

    def _aligned(self, other):
        other = self._coerce(other)
        order = min(self.order, other.order)
        n = n_coeffs(order)
        return self.coeffs[:n], other.coeffs[:n], order

    def __add__(self, other):
        a, b, order = self._aligned(other)
        return TruncatedSeries._wrap(a + b, order, self.backend)

    __radd__ = __add__

    def __sub__(self, other):
        a, b, order = self._aligned(other)
        return TruncatedSeries._wrap(a - b, order, self.backend)

    def __rsub__(self, other):
        a, b, order = self._aligned(other)
        return TruncatedSeries._wrap(b - a, order, self.backend)

    def __neg__(self):
        return TruncatedSeries._wrap(-self.coeffs, self.order, self.backend)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            sb = scalar_backend(other)
            ok = sb in (None, self.backend) or (sb == EXACT and self.backend == EXACT_EXP)
            other_s = to_scalar(other, self.backend) if ok else None
            if other_s is None:
                raise BackendMismatchError(f"cannot combine {self.backend} series with {other!r}")
            return TruncatedSeries._wrap(self.coeffs * other_s, self.order, self.backend)
        a, b, order = self._aligned(other)
        return TruncatedSeries._wrap(_raw_mul(a, b, order), order, self.backend)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * self._coerce(other).reciprocal()
        d = to_scalar(other, self.backend)
        if d == 0:
            raise SingularError("division of a series by zero")
        return TruncatedSeries._wrap(self.coeffs * (1 / d), self.order, self.backend)

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("series powers must be integers")
        n = int(n)
        if n < 0:
            return self.reciprocal() ** (-n)
        result = TruncatedSeries.constant(1, self.order, self.backend)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- calculus -----------------------------------------------------------

    def derive(self, axis: int, operation: str = "series_derive") -> "TruncatedSeries":
        """Formal partial derivative along ``axis`` (1..4); the order drops by one."""
        if not 1 <= axis <= NVARS:
            raise ValueError(f"axis must be 1..{NVARS}, got {axis}")
        if self.order < 1:
            raise OrderBudgetError(operation, self.order)
        src, dst, fac = _derive_table(self.order, axis - 1)
        out = _zeros(n_coeffs(self.order - 1), self.backend)
        vals = self.coeffs[src]
        if self.backend != FLOAT:
            out[dst] = [v * f for v, f in zip(vals, fac)]
        else:
            out[dst] = vals * np.asarray(fac, dtype=np.float64)
        return TruncatedSeries._wrap(out, self.order - 1, self.backend)

    def _homogeneous_parts(self):
        return [self.block(d) for d in range(self.order + 1)]

    def exp(self) -> "TruncatedSeries":
        a0 = self.value
        if self.backend == EXACT:
            if a0 != 0:
                raise TranscendenceError(f"exp of a series with constant term {a0}")
            scale = mpq(1)
        elif self.backend == EXACT_EXP:
            if isinstance(a0, ExpSum):
                raise TranscendenceError(f"exp of the transcendental constant {format_scalar(a0)}")
            scale = ExpSum.exp_of(a0)
        else:
            scale = math.exp(a0)
        D = self.order
        # Euler operator recursion: k E_k = sum_j j h_j E_{k-j}
        blocks = [None] * (D + 1)
        blocks[0] = _zeros(1, self.backend)
        blocks[0][0] = to_scalar(scale, self.backend)
        euler = [self.block(j) * to_scalar(j, self.backend) for j in range(D + 1)]
        full = _zeros(n_coeffs(D), self.backend)
        full[0] = blocks[0][0]
        for k in range(1, D + 1):
            acc = None
            for j in range(1, k + 1):
                part = _block_mul(euler[j], blocks[k - j], j, k - j)
                acc = part if acc is None else acc + part
            blocks[k] = acc * (to_scalar(1, self.backend) / k)
            lo, hi = block_bounds(k)
            full[lo:hi] = blocks[k]
        return TruncatedSeries._wrap(full, D, self.backend)

    def reciprocal(self) -> "TruncatedSeries":
        a0 = self.value
        if a0 == 0:
            raise SingularError("reciprocal of a series with zero constant term")
        inv0 = to_scalar(1, self.backend) / a0
        D = self.order
        blocks = [None] * (D + 1)
        blocks[0] = _zeros(1, self.backend)
        blocks[0][0] = inv0
        full = _zeros(n_coeffs(D), self.backend)
        full[0] = inv0
        for k in range(1, D + 1):
            acc = None
            for j in range(1, k + 1):
                part = _block_mul(self.block(j), blocks[k - j], j, k - j)
                acc = part if acc is None else acc + part
            blocks[k] = acc * (-inv0)
            lo, hi = block_bounds(k)
            full[lo:hi] = blocks[k]
        return TruncatedSeries._wrap(full, D, self.backend)

    def log(self) -> "TruncatedSeries":
        a0 = self.value
        if self.backend == EXACT:
            if a0 != 1:
                raise TranscendenceError(f"ln of a series with constant term {a0}")
            const = mpq(0)
        elif self.backend == EXACT_EXP:
            if a0 == 1:
                const = mpq(0)
            elif isinstance(a0, ExpSum) and a0.is_unit() and a0.terms[0][1] == 1:
                const = a0.terms[0][0]
            else:
                raise TranscendenceError(f"ln of a series with constant term {format_scalar(a0)}")
        else:
            if a0 <= 0:
                raise SingularError(f"ln of a series with non-positive constant term {a0}")
            const = math.log(a0)
        D = self.order
        degs = _degrees(D)
        if self.backend != FLOAT:
            euler_a = np.empty(len(degs), dtype=object)
            euler_a[:] = [c * int(d) for c, d in zip(self.coeffs, degs)]
        else:
            euler_a = self.coeffs * degs
        prod = _raw_mul(euler_a, self.reciprocal().coeffs, D)
        out = _zeros(n_coeffs(D), self.backend)
        out[0] = to_scalar(const, self.backend)
        if self.backend != FLOAT:
            out[1:] = [c / int(d) for c, d in zip(prod[1:], degs[1:])]
        else:
            out[1:] = prod[1:] / degs[1:]
        return TruncatedSeries._wrap(out, D, self.backend)

    def compose(self, inner: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        """Substitute ``inner[i]`` for ``x_{i+1}``; each inner series must vanish at the point."""
        if len(inner) != NVARS:
            raise ValueError(f"compose needs {NVARS} inner series")
        inner = [self._coerce(s) for s in inner]
        for i, s in enumerate(inner):
            if s.value != 0:
                raise ValueError(f"inner component {i + 1} has nonzero constant term {s.value}")
        order = min([self.order] + [s.order for s in inner])
        terms = {m: c for m, c in self.to_dict().items() if sum(m) <= order}
        arrays = [s.coeffs for s in inner]
        out = _horner(terms, 0, arrays, order, self.backend)
        return TruncatedSeries._wrap(out, order, self.backend)


def _horner(terms: dict, var: int, inner: list, order: int, backend: str) -> np.ndarray:
    """Evaluate the polynomial ``terms`` at the ``inner`` series, truncated at ``order``.

    Horner in one variable at a time.  The accumulator multiplied by ``k``
    copies of an inner series (valuation >= 1) is only needed to order
    ``order - k``, which keeps the cost close to a handful of full products.
    """
    n = n_coeffs(order)
    if not terms:
        return _zeros(n, backend)
    if var == NVARS:
        out = _zeros(n, backend)
        for c in terms.values():
            out[0] = out[0] + c
        return out
    groups: dict[int, dict] = {}
    for e, c in terms.items():
        groups.setdefault(e[var], {})[e] = c
    acc = None
    for k in range(max(groups), -1, -1):
        sub = order - k
        if sub < 0:
            continue
        if acc is None:
            acc = _zeros(n_coeffs(sub), backend)
        else:
            y = inner[var][: n_coeffs(sub)]
            acc = _raw_mul(y, _pad(acc, sub, backend), sub)
        if k in groups:
            acc = acc + _horner(groups[k], var + 1, inner, sub, backend)
    return acc


# ---------------------------------------------------------------------------
# functional API


def series_arith(a: TruncatedSeries, b: TruncatedSeries, op: str) -> TruncatedSeries:
    if a.backend != b.backend:
        raise BackendMismatchError(f"cannot combine {a.backend} and {b.backend} series")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown series operation {op!r}")


def series_derive(a: TruncatedSeries, axis: int) -> TruncatedSeries:
    return a.derive(axis)


def series_transcend(a: TruncatedSeries, fn: str) -> TruncatedSeries:
    if fn == "exp":
        return a.exp()
    if fn == "ln":
        return a.log()
    if fn == "reciprocal":
        return a.reciprocal()
    raise ValueError(f"unknown transcendental {fn!r}")


def series_compose(outer: TruncatedSeries, inner: Sequence[TruncatedSeries]) -> TruncatedSeries:
    return outer.compose(inner)


def coordinate_series(order: int, backend: str = EXACT, point: Iterable = (0, 0, 0, 0)):
    """The four coordinate functions expanded about ``point``."""
    return [
        TruncatedSeries.variable(i + 1, order, backend, offset=p) for i, p in enumerate(point)
    ]
