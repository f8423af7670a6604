"""Exterior algebra and Lie calculus on a 4-dimensional chart.

Forms and vector fields hold their coefficients either as
:class:`~formgerms.expr.Expression` trees ("expression mode") or as
:class:`~formgerms.jets.TruncatedSeries` jets about a common point ("jet
mode").  Every operation works in both modes; the jet mode is what the
invariant computations run on.

Conventions, fixed once for the whole package:

* ``i_X`` contracts the first slot, ``(i_X a)(Y, ...) = a(X, Y, ...)``;
* ``dx^{i1} ^ ... ^ dx^{ik}`` evaluates on vectors as the determinant of
  their components (so ``(dx1^dx2)(X, Y) = X^1 Y^2 - X^2 Y^1``);
* for a 2-form ``F = sum_{i<j} F_ij dx^i ^ dx^j`` the coefficient of ``dF`` on
  ``dx^i ^ dx^j ^ dx^k`` (``i<j<k``) is ``F_jk,i - F_ik,j + F_ij,k``;
* the volume form is ``dx1 ^ dx2 ^ dx3 ^ dx4``.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from . import linalg
from .errors import BackendMismatchError, SingularError
from .expr import calculus as _calc
from .expr.calculus import Binding, eval_jet, eval_series, substitute, symbolic_derive
from .expr.nodes import ZERO, Const, Expression, as_expression
from .jets import EXACT, FLOAT, NVARS, TruncatedSeries, to_scalar

EXPRESSION_MODE = "expression"
JET_MODE = "jet"

BASIS = {k: tuple(combinations(range(1, NVARS + 1), k)) for k in range(NVARS + 1)}


# ---------------------------------------------------------------------------
# coefficient helpers (work on Expression, TruncatedSeries and plain numbers)


def _is_number(c) -> bool:
    return isinstance(c, (int, Fraction)) or type(c).__name__ == "mpq"


def c_add(a, b):
    if isinstance(a, Expression) or isinstance(b, Expression):
        return _calc.add(as_expression(a), as_expression(b))
    return a + b


def c_sub(a, b):
    if isinstance(a, Expression) or isinstance(b, Expression):
        return _calc.sub(as_expression(a), as_expression(b))
    return a - b


def c_mul(a, b):
    if isinstance(a, Expression) or isinstance(b, Expression):
        return _calc.mul(as_expression(a), as_expression(b))
    return a * b


def c_neg(a):
    if isinstance(a, Expression):
        return _calc.neg(a)
    return -a


def c_derive(c, axis: int, operation: str = "derivative"):
    if isinstance(c, Expression):
        return symbolic_derive(c, axis)
    return c.derive(axis, operation)


def c_is_zero(c) -> bool:
    """Structural zero test: exact for jets, syntactic for expressions."""
    if isinstance(c, TruncatedSeries):
        return c.is_zero()
    if isinstance(c, Expression):
        return isinstance(c, Const) and c.value == 0
    return c == 0


def _sum(terms, zero):
    acc = zero
    for t in terms:
        acc = c_add(acc, t)
    return acc


def _sort_sign(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``indices`` (0 when an index repeats)."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign, tuple(sorted(idx))


class _Mode:
    """Shared mode bookkeeping for forms and vector fields."""

    def __init__(self, values: Iterable, point=None):
        values = list(values)
        series = [v for v in values if isinstance(v, TruncatedSeries)]
        if series:
            backends = {s.backend for s in series}
            if len(backends) > 1:
                raise BackendMismatchError(f"mixed backends in one object: {sorted(backends)}")
            self.mode = JET_MODE
            self.backend = series[0].backend
            self.order = min(s.order for s in series)
            if any(isinstance(v, Expression) for v in values):
                raise BackendMismatchError("cannot mix expression and jet coefficients")
        else:
            self.mode = EXPRESSION_MODE
            self.backend = None
            self.order = None
        self.point = None if point is None else tuple(point)

    def normalize(self, c):
        if self.mode == JET_MODE:
            if isinstance(c, TruncatedSeries):
                return c.truncate(self.order) if c.order > self.order else c
            return TruncatedSeries.constant(c, self.order, self.backend)
        return as_expression(c)

    def zero(self):
        if self.mode == JET_MODE:
            return TruncatedSeries.zero(self.order, self.backend)
        return ZERO


def _check_compatible(*objs):
    jets = [o for o in objs if o.mode == JET_MODE]
    if jets and len(jets) != len(objs):
        raise BackendMismatchError("cannot combine expression-mode and jet-mode objects")
    if jets:
        if len({o.backend for o in jets}) > 1:
            raise BackendMismatchError("operands carry different backends")
        points = {o.point for o in jets if o.point is not None}
        if len(points) > 1:
            raise BackendMismatchError(f"jets expanded about different points: {sorted(points)}")


def _point_of(*objs):
    for o in objs:
        if o.point is not None:
            return o.point
    return None


# ---------------------------------------------------------------------------


class DifferentialForm:
    """A k-form on the chart, ``sum_I f_I dx^I`` over increasing index tuples ``I``.

    ``coeffs`` may use any ordering of indices; it is normalised with the
    permutation sign, and tuples with a repeated index are dropped.
    """

    def __init__(self, degree: int, coeffs: Mapping[Sequence[int], object] | None = None, point=None):
        if not 0 <= degree <= NVARS:
            raise ValueError(f"degree must be 0..{NVARS}, got {degree}")
        coeffs = dict(coeffs or {})
        self._m = _Mode(coeffs.values(), point)
        slots = {I: self._m.zero() for I in BASIS[degree]}
        for key, c in coeffs.items():
            key = (key,) if isinstance(key, int) else tuple(key)
            if len(key) != degree:
                raise ValueError(f"index tuple {key} does not match degree {degree}")
            if any(not 1 <= i <= NVARS for i in key):
                raise ValueError(f"indices must lie in 1..{NVARS}: {key}")
            sign, sorted_key = _sort_sign(key)
            if sign == 0:
                continue
            c = self._m.normalize(c)
            slots[sorted_key] = c_add(slots[sorted_key], c if sign > 0 else c_neg(c))
        self.degree = degree
        self.coeffs = slots

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, degree: int, like=None) -> "DifferentialForm":
        if like is not None and like.mode == JET_MODE:
            z = TruncatedSeries.zero(like.order, like.backend)
            return cls(degree, {I: z for I in BASIS[degree]}, like.point)
        return cls(degree, {})

    @classmethod
    def two_form(cls, F12=0, F13=0, F14=0, F23=0, F24=0, F34=0, point=None) -> "DifferentialForm":
        return cls(
            2,
            {(1, 2): F12, (1, 3): F13, (1, 4): F14, (2, 3): F23, (2, 4): F24, (3, 4): F34},
            point,
        )

    @classmethod
    def basis(cls, *indices: int) -> "DifferentialForm":
        """``dx^{i1} ^ ... ^ dx^{ik}`` with constant coefficient 1."""
        return cls(len(indices), {tuple(indices): 1})

    # -- mode -----------------------------------------------------------------

    @property
    def mode(self) -> str:
        return self._m.mode

    @property
    def backend(self):
        return self._m.backend

    @property
    def order(self):
        return self._m.order

    @property
    def point(self):
        return self._m.point

    def to_jet(self, point=(0, 0, 0, 0), order: int = 2, backend: str = EXACT, bindings: Binding | None = None):
        """Expand every coefficient about ``point`` (expression mode only)."""
        if self.mode == JET_MODE:
            if tuple(point) != self.point and self.point is not None:
                raise BackendMismatchError("form is already a jet about a different point")
            return self.truncate(order) if order < self.order else self
        return DifferentialForm(
            self.degree,
            {I: eval_jet(c, point, order, bindings, backend) for I, c in self.coeffs.items()},
            point,
        )

    def truncate(self, order: int) -> "DifferentialForm":
        return DifferentialForm(self.degree, {I: c.truncate(order) for I, c in self.coeffs.items()}, self.point)

    def value_at(self, point=None, backend: str = EXACT, bindings: Binding | None = None) -> dict:
        """Coefficient values at the point as backend scalars."""
        if self.mode == JET_MODE:
            return {I: c.value for I, c in self.coeffs.items()}
        return {I: eval_jet(c, point, 0, bindings, backend).value for I, c in self.coeffs.items()}

    # -- access ---------------------------------------------------------------

    def __getitem__(self, key):
        key = (key,) if isinstance(key, int) else tuple(key)
        sign, sorted_key = _sort_sign(key)
        if sign == 0:
            return self._m.zero()
        c = self.coeffs[sorted_key]
        return c if sign > 0 else c_neg(c)

    def matrix(self) -> list[list]:
        """The 4x4 skew coefficient matrix of a 2-form, ``M[i][j] = F_{i+1, j+1}``."""
        if self.degree != 2:
            raise ValueError("matrix() is defined for 2-forms only")
        return [[self[(i, j)] for j in range(1, 5)] for i in range(1, 5)]

    def components(self) -> list:
        """Coefficients in the order of :data:`BASIS` for this degree."""
        return [self.coeffs[I] for I in BASIS[self.degree]]

    def is_zero(self) -> bool:
        return all(c_is_zero(c) for c in self.coeffs.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        return self.degree == other.degree and self.mode == other.mode and all(
            self.coeffs[I] == other.coeffs[I] for I in BASIS[self.degree]
        )

    __hash__ = None

    def __repr__(self) -> str:
        terms = []
        for I, c in self.coeffs.items():
            if c_is_zero(c):
                continue
            basis = "^".join(f"dx{i}" for i in I) or "1"
            text = c.to_polynomial_string() if isinstance(c, TruncatedSeries) else str(c)
            terms.append(f"({text})*{basis}")
        body = " + ".join(terms) if terms else "0"
        where = f", jet at {self.point} order {self.order}" if self.mode == JET_MODE else ""
        return f"DifferentialForm[{self.degree}]({body}{where})"

    # -- linear structure ---------------------------------------------------

    def _binary(self, other, fn):
        if not isinstance(other, DifferentialForm) or other.degree != self.degree:
            raise TypeError("forms must have the same degree")
        _check_compatible(self, other)
        return DifferentialForm(
            self.degree,
            {I: fn(self.coeffs[I], other.coeffs[I]) for I in BASIS[self.degree]},
            _point_of(self, other),
        )

    def __add__(self, other):
        return self._binary(other, c_add)

    def __sub__(self, other):
        return self._binary(other, c_sub)

    def __neg__(self):
        return DifferentialForm(self.degree, {I: c_neg(c) for I, c in self.coeffs.items()}, self.point)

    def scale(self, f) -> "DifferentialForm":
        """Multiply every coefficient by the function (or number) ``f``."""
        return DifferentialForm(self.degree, {I: c_mul(f, c) for I, c in self.coeffs.items()}, self.point)

    def __mul__(self, f):
        if isinstance(f, DifferentialForm):
            return wedge(self, f)
        return self.scale(f)

    __rmul__ = scale

    def __xor__(self, other):
        return wedge(self, other)

    def __call__(self, *fields: "VectorField"):
        return evaluate(self, *fields)


class VectorField:
    """Four component functions ``X = sum X^i d/dx^i``."""

    def __init__(self, components: Sequence, point=None):
        components = list(components)
        if len(components) != NVARS:
            raise ValueError(f"a vector field needs {NVARS} components")
        self._m = _Mode(components, point)
        self.components = tuple(self._m.normalize(c) for c in components)

    @classmethod
    def coordinate(cls, axis: int, like=None) -> "VectorField":
        """The coordinate field ``d/dx^axis``."""
        comps = [1 if i == axis else 0 for i in range(1, NVARS + 1)]
        if like is not None and like.mode == JET_MODE:
            comps = [TruncatedSeries.constant(c, like.order, like.backend) for c in comps]
            return cls(comps, like.point)
        return cls(comps)

    mode = property(lambda self: self._m.mode)
    backend = property(lambda self: self._m.backend)
    order = property(lambda self: self._m.order)
    point = property(lambda self: self._m.point)

    def __getitem__(self, i: int):
        """Component along ``d/dx^i`` (1-based)."""
        return self.components[i - 1]

    def to_jet(self, point=(0, 0, 0, 0), order: int = 2, backend: str = EXACT, bindings=None):
        if self.mode == JET_MODE:
            return self.truncate(order) if order < self.order else self
        return VectorField([eval_jet(c, point, order, bindings, backend) for c in self.components], point)

    def truncate(self, order: int) -> "VectorField":
        return VectorField([c.truncate(order) for c in self.components], self.point)

    def value_at(self) -> list:
        return [c.value for c in self.components]

    def apply(self, f):
        """Directional derivative ``X(f) = sum X^i df/dx^i``."""
        if isinstance(f, TruncatedSeries) and self.mode == JET_MODE and f.backend != self.backend:
            raise BackendMismatchError("function and field carry different backends")
        terms = [c_mul(self.components[i], c_derive(f, i + 1, "vector field application")) for i in range(NVARS)]
        return _sum(terms[1:], terms[0])

    def is_zero(self) -> bool:
        return all(c_is_zero(c) for c in self.components)

    def _binary(self, other, fn):
        _check_compatible(self, other)
        return VectorField([fn(a, b) for a, b in zip(self.components, other.components)], _point_of(self, other))

    def __add__(self, other):
        return self._binary(other, c_add)

    def __sub__(self, other):
        return self._binary(other, c_sub)

    def __neg__(self):
        return VectorField([c_neg(c) for c in self.components], self.point)

    def scale(self, f) -> "VectorField":
        return VectorField([c_mul(f, c) for c in self.components], self.point)

    __rmul__ = scale
    __mul__ = scale

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.mode == other.mode and all(a == b for a, b in zip(self.components, other.components))

    __hash__ = None

    def __repr__(self) -> str:
        parts = []
        for i, c in enumerate(self.components, start=1):
            if c_is_zero(c):
                continue
            text = c.to_polynomial_string() if isinstance(c, TruncatedSeries) else str(c)
            parts.append(f"({text})*d{i}")
        return "VectorField(" + (" + ".join(parts) or "0") + ")"


# ---------------------------------------------------------------------------
# operations


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    """Graded-antisymmetric product; degrees above 4 give the zero form."""
    _check_compatible(a, b)
    k = a.degree + b.degree
    point = _point_of(a, b)
    if k > NVARS:
        return DifferentialForm.zero(NVARS, a if a.mode == JET_MODE else None)
    out: dict = {}
    for I, f in a.coeffs.items():
        if c_is_zero(f):
            continue
        for J, g in b.coeffs.items():
            if c_is_zero(g):
                continue
            sign, K = _sort_sign(I + J)
            if sign == 0:
                continue
            term = c_mul(f, g)
            prev = out.get(K)
            if sign < 0:
                out[K] = c_neg(term) if prev is None else c_sub(prev, term)
            else:
                out[K] = term if prev is None else c_add(prev, term)
    form = DifferentialForm(k, out, point)
    if not out and a.mode == JET_MODE:
        return DifferentialForm.zero(k, _min_order_like(a, b))
    return form


def _min_order_like(a, b):
    return a if a.order <= b.order else b


def exterior_derivative(a: DifferentialForm) -> DifferentialForm:
    """``d(sum f_I dx^I) = sum_m df_I/dx^m dx^m ^ dx^I``; ``d`` of a 4-form is 0."""
    if a.degree == NVARS:
        if a.mode == JET_MODE and a.order < 1:
            from .errors import OrderBudgetError

            raise OrderBudgetError("exterior_derivative", a.order)
        return DifferentialForm.zero(NVARS, a.truncate(a.order - 1) if a.mode == JET_MODE else None)
    out: dict = {}
    for I, f in a.coeffs.items():
        for m in range(1, NVARS + 1):
            if m in I:
                continue
            df = c_derive(f, m, "exterior_derivative")
            sign, K = _sort_sign((m,) + I)
            if K in out:
                out[K] = c_add(out[K], df) if sign > 0 else c_sub(out[K], df)
            else:
                out[K] = df if sign > 0 else c_neg(df)
    if a.degree == 0 and not out:
        out = {}
    return DifferentialForm(a.degree + 1, out, a.point)


d = exterior_derivative


def interior_product(X: VectorField, a: DifferentialForm) -> DifferentialForm:
    """Contraction in the first slot: ``(i_X a)(Y, ...) = a(X, Y, ...)``."""
    if a.degree < 1:
        raise ValueError("interior product needs a form of degree >= 1")
    _check_compatible(X, a)
    out: dict = {}
    for I, f in a.coeffs.items():
        for r, i in enumerate(I):
            rest = I[:r] + I[r + 1:]
            term = c_mul(X[i], f)
            if rest in out:
                out[rest] = c_add(out[rest], term) if r % 2 == 0 else c_sub(out[rest], term)
            else:
                out[rest] = term if r % 2 == 0 else c_neg(term)
    return DifferentialForm(a.degree - 1, out, _point_of(X, a))


def evaluate(a: DifferentialForm, *fields: VectorField):
    """``a(X_1, ..., X_k)`` as a function (expression or jet)."""
    if len(fields) != a.degree:
        raise ValueError(f"a {a.degree}-form takes {a.degree} vector arguments")
    form = a
    for X in fields:
        form = interior_product(X, form)
    return form.coeffs[()]


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]^i = X(Y^i) - Y(X^i)``."""
    _check_compatible(X, Y)
    return VectorField(
        [c_sub(X.apply(Y[i]), Y.apply(X[i])) for i in range(1, NVARS + 1)],
        _point_of(X, Y),
    )


def lie_derivative(X: VectorField, a: DifferentialForm) -> DifferentialForm:
    """Cartan's formula ``L_X a = i_X da + d(i_X a)``."""
    if a.degree == 0:
        return DifferentialForm(0, {(): X.apply(a.coeffs[()])}, _point_of(X, a))
    first = interior_product(X, exterior_derivative(a)) if a.degree < NVARS else None
    second = exterior_derivative(interior_product(X, a))
    if first is None:
        return second
    return first + second


class ChartMap:
    """A map ``R^4 -> R^4`` given by four component expressions."""

    def __init__(self, components: Sequence, base_point=None):
        components = [as_expression(c) for c in components]
        if len(components) != NVARS:
            raise ValueError(f"a chart map needs {NVARS} components")
        self.components = tuple(components)
        self.base_point = None if base_point is None else tuple(base_point)

    @classmethod
    def identity(cls) -> "ChartMap":
        from .expr.nodes import Var

        return cls([Var(i) for i in range(1, NVARS + 1)])

    def __call__(self, point, backend: str = EXACT, bindings=None) -> tuple:
        return tuple(eval_jet(c, point, 0, bindings, backend).value for c in self.components)

    def jets(self, point, order: int, backend: str = EXACT, bindings=None) -> list[TruncatedSeries]:
        return [eval_jet(c, point, order, bindings, backend) for c in self.components]

    def jacobian_at(self, point, backend: str = EXACT, bindings=None) -> list[list]:
        js = self.jets(point, 1, backend, bindings)
        return [[s[tuple(1 if k == j else 0 for k in range(NVARS))] for j in range(NVARS)] for s in js]

    def is_invertible_at(self, point, backend: str = EXACT, bindings=None) -> bool:
        return linalg.rank(self.jacobian_at(point, backend, bindings), backend) == NVARS

    def then(self, outer: "ChartMap") -> "ChartMap":
        """The composite ``outer o self``."""
        mapping = {i + 1: c for i, c in enumerate(self.components)}
        return ChartMap([substitute(c, mapping) for c in outer.components])

    def __repr__(self) -> str:
        return "ChartMap(" + ", ".join(str(c) for c in self.components) + ")"


def pullback(
    phi: ChartMap,
    a: DifferentialForm,
    point,
    order: int,
    backend: str = EXACT,
    bindings: Binding | None = None,
) -> DifferentialForm:
    """Jet of ``phi^* a`` at ``point``, truncated at ``order``.

    Coefficients are composed with ``phi`` and multiplied by the minors of the
    Jacobian; ``a`` may be in expression mode or a jet about ``phi(point)``.
    """
    if a.mode == JET_MODE:
        backend = a.backend
        order = min(order, a.order)
    phi_jets = phi.jets(point, order + 1, backend, bindings)
    jac0 = [[s[tuple(1 if k == j else 0 for k in range(NVARS))] for j in range(NVARS)] for s in phi_jets]
    if linalg.rank(jac0, backend) < NVARS:
        raise SingularError(f"Jacobian of {phi} is singular at {tuple(point)}")
    image = tuple(s.value for s in phi_jets)
    inner = [s.truncate(order) for s in phi_jets]
    if a.mode == JET_MODE:
        if a.point is not None and tuple(to_scalar(p, backend) for p in a.point) != image:
            raise BackendMismatchError(f"jet is expanded about {a.point}, but phi maps the point to {image}")
        shifted = [s - s.value for s in inner]
        coeffs = {J: c.compose(shifted) for J, c in a.coeffs.items()}
    else:
        coeffs = {J: eval_series(c, inner, bindings) for J, c in a.coeffs.items()}
    dphi = [
        DifferentialForm(1, {(m,): s.derive(m, "pullback") for m in range(1, NVARS + 1)}, point)
        for s in phi_jets
    ]
    result = None
    for J, f in coeffs.items():
        if f.is_zero():
            continue
        piece = DifferentialForm(0, {(): f}, point)
        for j in J:
            piece = wedge(piece, dphi[j - 1])
        result = piece if result is None else result + piece
    if result is None:
        z = TruncatedSeries.zero(order, backend)
        return DifferentialForm(a.degree, {I: z for I in BASIS[a.degree]}, point)
    return result


def _skew_values(a: DifferentialForm, point, backend, bindings):
    vals = a.value_at(point, backend, bindings)
    m = [[to_scalar(0, a.backend or backend)] * NVARS for _ in range(NVARS)]
    for (i, j), v in vals.items():
        m[i - 1][j - 1] = v
        m[j - 1][i - 1] = -v
    return m


def rank_of_2form(a: DifferentialForm, point=(0, 0, 0, 0), backend: str = EXACT, bindings=None) -> int:
    """Rank (0, 2 or 4) of the 2-form at the point.

    Exact backend: 4 iff the Pfaffian ``F12 F34 + F14 F23 - F13 F24`` is
    nonzero.  Float backend: singular values above ``1e-9 * ||F||``.
    """
    if a.degree != 2:
        raise ValueError("rank_of_2form needs a 2-form")
    backend = a.backend or backend
    m = _skew_values(a, point, backend, bindings)
    if backend == FLOAT:
        return linalg.rank(m, FLOAT)
    if linalg.pfaffian4(m) != 0:
        return 4
    return 2 if any(v != 0 for row in m for v in row) else 0


def class_of_1form(w: DifferentialForm, point=(0, 0, 0, 0), backend: str = EXACT, bindings=None) -> int:
    """Class of a 1-form at the point: rank of ``w`` stacked on the matrix of ``dw``."""
    if w.degree != 1:
        raise ValueError("class_of_1form needs a 1-form")
    if w.mode == EXPRESSION_MODE:
        w = w.to_jet(point, 1, backend, bindings)
    backend = w.backend
    dw = exterior_derivative(w)
    row = [w.coeffs[(i,)].value for i in range(1, NVARS + 1)]
    rows = [row] + _skew_values(dw, point, backend, bindings)
    return linalg.rank(rows, backend)
