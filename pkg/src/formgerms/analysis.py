"""Invariants of a rank-4 two-form: the attached 1-forms, type, ``I`` and ``A``.

Everything here works on jets at a point.  A :class:`Germ` expands a 2-form
once and caches each derived object, so the frame layer can reuse them.

* ``omega``: the unique 1-form with ``omega ^ Omega = d Omega``;
* ``phi``: the unique 1-form with ``phi ^ Omega = omega ^ d omega``;
* ``I``: the function with ``d omega ^ d omega = I * Omega ^ Omega``;
* ``A``: the endomorphism with ``d omega(X, Y) = Omega(A X, Y)``.

On the exact backend an expansion that meets ``exp`` of a nonzero rational is
redone on the ``exact-exp`` backend, which keeps every value exact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import linalg
from .errors import DegenerateFormError, OrderBudgetError, TranscendenceError
from .exterior import (
    BASIS,
    EXPRESSION_MODE,
    DifferentialForm,
    VectorField,
    class_of_1form,
    exterior_derivative,
    interior_product,
    wedge,
)
from .expr import calculus
from .expr.nodes import Const, Var, as_expression
from .expr.zerotest import UNKNOWN_VERDICT, ZERO_VERDICT, is_zero
from .jets import EXACT, EXACT_EXP, FLOAT, NVARS, TruncatedSeries, format_scalar, to_scalar

DEFAULT_PROBE_RADIUS = Fraction(1, 32)
DEFAULT_PROBE_COUNT = 16
DEFAULT_PROBE_SEED = 0

DEGENERATE = "Degenerate"
INDETERMINATE = "Indeterminate"


def expand(form: DifferentialForm, point, order: int, backend: str = EXACT, bindings=None):
    """Jet of an expression-mode form, promoting ``exact`` to ``exact-exp`` when needed."""
    if form.mode != EXPRESSION_MODE:
        if form.order < order:
            raise OrderBudgetError("expand", form.order, order - form.order)
        return form.truncate(order) if form.order > order else form
    try:
        return form.to_jet(point, order, backend, bindings)
    except TranscendenceError:
        if backend != EXACT:
            raise
        return form.to_jet(point, order, EXACT_EXP, bindings)


def _wedge_matrix(Om: DifferentialForm) -> list[list]:
    """Matrix of ``alpha -> alpha ^ Omega`` from 1-forms to 3-forms (rows: BASIS[3])."""
    zero = Om.coeffs[(1, 2)] * 0
    rows = []
    for K in BASIS[3]:
        row = []
        for m in range(1, NVARS + 1):
            if m not in K:
                row.append(zero)
                continue
            rest = tuple(i for i in K if i != m)
            sign = 1 if (K.index(m) % 2 == 0) else -1
            row.append(Om.coeffs[rest] if sign > 0 else -Om.coeffs[rest])
        rows.append(row)
    return rows


def solve_wedge(Om: DifferentialForm, three_form: DifferentialForm) -> DifferentialForm:
    """The unique 1-form ``alpha`` with ``alpha ^ Omega = three_form`` (rank 4 required)."""
    order = min(Om.order, three_form.order)
    Om_t = Om.truncate(order) if Om.order > order else Om
    rhs = [three_form.coeffs[K] for K in BASIS[3]]
    rhs = [c.truncate(order) if c.order > order else c for c in rhs]
    sol = linalg.series_solve(_wedge_matrix(Om_t), rhs)
    return DifferentialForm(1, {(m,): s for m, s in zip(range(1, NVARS + 1), sol)}, Om.point)


def pfaffian(Om: DifferentialForm):
    """Pfaffian ``F12 F34 + F14 F23 - F13 F24`` of a 2-form (a function)."""
    F = Om.coeffs
    return F[(1, 2)] * F[(3, 4)] + F[(1, 4)] * F[(2, 3)] - F[(1, 3)] * F[(2, 4)]


def _rank_at(Om: DifferentialForm) -> int:
    from .exterior import rank_of_2form

    return rank_of_2form(Om)


class Germ:
    """A 2-form expanded at a point, with lazily computed invariants.

    ``form`` may be in expression mode (expanded here to ``order``) or already
    a jet.  Attributes are computed on first access and then cached.
    """

    def __init__(self, form: DifferentialForm, point=(0, 0, 0, 0), order: int = 7,
                 backend: str = EXACT, bindings: Mapping | None = None):
        if form.degree != 2:
            raise ValueError("a germ needs a 2-form")
        self.source = form
        self.point = tuple(point)
        self.Omega = expand(form, point, order, backend, bindings)
        self.backend = self.Omega.backend
        self.order = self.Omega.order
        self._cache: dict = {}
        self.rank = _rank_at(self.Omega)

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def require_rank4(self):
        if self.rank < 4:
            raise DegenerateFormError(self.rank)

    def _need(self, operation: str, consumed: int):
        if self.order < consumed:
            raise OrderBudgetError(operation, self.order, consumed - self.order)

    @property
    def dOmega(self) -> DifferentialForm:
        self._need("d Omega", 1)
        return self._get("dOmega", lambda: exterior_derivative(self.Omega))

    @property
    def pf(self) -> TruncatedSeries:
        return self._get("pf", lambda: pfaffian(self.Omega))

    @property
    def omega(self) -> DifferentialForm:
        self.require_rank4()
        self._need("compute_omega", 1)
        return self._get("omega", lambda: solve_wedge(self.Omega, self.dOmega))

    @property
    def omega_via_field(self) -> DifferentialForm:
        """``omega = 2 i_X Omega`` with ``i_X (Omega ^ Omega) = d Omega``."""
        self.require_rank4()
        self._need("compute_omega", 1)

        def build():
            dO = self.dOmega
            # Omega ^ Omega = 2 Pf vol, and i_X vol = sum_m (-1)^(m-1) X^m dx^(rest)
            inv = (self.pf.truncate(dO.order) * 2).reciprocal()
            comps = []
            for m in range(1, NVARS + 1):
                rest = tuple(i for i in range(1, NVARS + 1) if i != m)
                c = dO.coeffs[rest] * inv
                comps.append(c if m % 2 == 1 else -c)
            X = VectorField(comps, self.point)
            return interior_product(X, self.Omega).scale(2)

        return self._get("omega2", build)

    @property
    def domega(self) -> DifferentialForm:
        self._need("d omega", 2)
        return self._get("domega", lambda: exterior_derivative(self.omega))

    @property
    def phi(self) -> DifferentialForm:
        self._need("compute_phi", 2)
        return self._get("phi", lambda: solve_wedge(self.Omega, wedge(self.omega, self.domega)))

    @property
    def I_series(self) -> TruncatedSeries:
        """``I`` as a jet (order ``D - 2``)."""
        self._need("compute_I", 2)

        def build():
            top = wedge(self.domega, self.domega).coeffs[(1, 2, 3, 4)]
            vol = wedge(self.Omega, self.Omega).coeffs[(1, 2, 3, 4)]
            return top * vol.truncate(top.order).reciprocal()

        return self._get("I", build)

    @property
    def I(self):
        return self.I_series.value

    def omega_class(self) -> int:
        return class_of_1form(self.omega)

    def phi_class(self) -> int:
        self._need("class of phi", 3)
        return class_of_1form(self.phi)

    def omega_vanishes(self) -> bool:
        return all(c.value == 0 for c in self.omega.coeffs.values())


def _germ(Omega, point, order, backend, bindings) -> Germ:
    if isinstance(Omega, Germ):
        return Omega
    return Germ(Omega, point, order, backend, bindings)


def compute_omega(Omega: DifferentialForm, point=(0, 0, 0, 0), order: int = 3, backend: str = EXACT,
                  bindings=None, check_paths: bool = True) -> DifferentialForm:
    """Jet of ``omega`` at the point, order ``order - 1``.

    With ``check_paths`` the wedge-system solution is compared with the
    ``2 i_X Omega`` construction and an ``AssertionError`` is raised on
    disagreement.
    """
    g = _germ(Omega, point, order, backend, bindings)
    w = g.omega
    if check_paths:
        w2 = g.omega_via_field
        if g.backend == FLOAT:
            scale = max(max(c.max_abs() for c in w.coeffs.values()), 1.0)
            bad = max((w - w2).coeffs[I].max_abs() for I in BASIS[1]) > 1e-9 * scale
        else:
            bad = not (w - w2).is_zero()
        if bad:
            raise AssertionError("the two constructions of omega disagree")
    return w


def compute_phi(Omega, point=(0, 0, 0, 0), order: int = 3, backend: str = EXACT, bindings=None):
    """Jet of ``phi`` at the point, order ``order - 2``."""
    return _germ(Omega, point, order, backend, bindings).phi


def compute_I(Omega, point=(0, 0, 0, 0), order: int = 2, backend: str = EXACT, bindings=None):
    """Value of ``I`` at the point."""
    return _germ(Omega, point, order, backend, bindings).I


@dataclass(frozen=True)
class InvariantRecord:
    I: object
    pfaffian: object
    A_matrix: tuple
    char_poly: tuple
    char_poly_residual: object
    backend: str


def compute_A(Omega, point=(0, 0, 0, 0), order: int = 2, backend: str = EXACT, bindings=None) -> InvariantRecord:
    """``A = F^{-1} H`` at the point, with ``F`` and ``H`` the matrices of ``Omega`` and ``d omega``."""
    g = _germ(Omega, point, order, backend, bindings)
    g.require_rank4()
    F = [[c.value for c in row] for row in g.Omega.matrix()]
    H = [[c.value for c in row] for row in g.domega.matrix()]
    Finv = linalg.inverse(F, g.backend)
    A = linalg.matmul(Finv, H)
    cp = linalg.charpoly(A, g.backend)
    I = g.I
    zero = to_scalar(0, g.backend)
    target = [to_scalar(1, g.backend), zero, 2 * I, zero, I * I]
    diffs = [a - b for a, b in zip(cp, target)]
    if g.backend == FLOAT:
        residual = max(abs(float(d)) for d in diffs)
    else:
        nonzero = [d for d in diffs if d != 0]
        residual = nonzero[0] if nonzero else zero
    return InvariantRecord(
        I=I,
        pfaffian=g.pf.value,
        A_matrix=tuple(tuple(r) for r in A),
        char_poly=tuple(cp),
        char_poly_residual=residual,
        backend=g.backend,
    )


# ---------------------------------------------------------------------------
# type determination


@dataclass(frozen=True)
class ProbeSettings:
    radius: Fraction = DEFAULT_PROBE_RADIUS
    count: int = DEFAULT_PROBE_COUNT
    seed: int = DEFAULT_PROBE_SEED


@dataclass
class TypeVerdict:
    rank: int
    type: object  # int 0..4 or "Degenerate"
    subtype: str | None = None
    constancy_certified: bool = False
    sample_report: list = field(default_factory=list)
    backend: str = EXACT
    order: int = 0
    reason: str | None = None

    @property
    def degenerate(self) -> bool:
        return self.type == DEGENERATE


def probe_points(point, settings: ProbeSettings, rng: random.Random | None = None) -> list[tuple]:
    """``count`` rational points in the cube of half-side ``radius`` about ``point``."""
    rng = rng if rng is not None else random.Random(settings.seed)
    radius = Fraction(settings.radius)
    grid = 64
    out = []
    for _ in range(settings.count):
        out.append(tuple(Fraction(p) + radius * Fraction(rng.randint(-grid, grid), grid) for p in point))
    return out


def _closed(form: DifferentialForm, germ: Germ, bindings) -> str:
    """Zero-test verdict for ``d Omega``."""
    if form.mode == EXPRESSION_MODE:
        verdicts = [is_zero(c, bindings).status for c in exterior_derivative(form).coeffs.values()]
        if all(v == ZERO_VERDICT for v in verdicts):
            return ZERO_VERDICT
        if any(v not in (ZERO_VERDICT, UNKNOWN_VERDICT) for v in verdicts):
            return "NonZero"
        return UNKNOWN_VERDICT
    return ZERO_VERDICT if germ.dOmega.is_zero() else "NonZero"


def determine_type(
    Omega: DifferentialForm,
    point=(0, 0, 0, 0),
    order: int = 3,
    probe: ProbeSettings | None = None,
    backend: str = EXACT,
    bindings=None,
    rng: random.Random | None = None,
) -> TypeVerdict:
    """Type (0-4) and, for type 3, subtype of the germ at the point.

    The class of ``omega`` at the point gives the candidate type; constancy is
    probed at random rational points nearby (expression-mode input only) and
    reported in ``sample_report``.  Subtype ``3.k`` is the class of ``phi``
    under the same probe policy.
    """
    probe = probe or ProbeSettings()
    if Omega.mode == EXPRESSION_MODE:
        order = max(order, 3)
    g = Germ(Omega, point, order, backend, bindings)
    verdict = TypeVerdict(rank=g.rank, type=DEGENERATE, backend=g.backend, order=g.order)
    if g.rank < 4:
        verdict.reason = f"rank {g.rank} < 4"
        return verdict
    closed = _closed(Omega, g, bindings)
    if closed == ZERO_VERDICT:
        verdict.type = 0
        verdict.constancy_certified = True
        return verdict
    if g.omega_vanishes():
        verdict.reason = "omega vanishes at the point while d Omega does not"
        return verdict
    t = g.omega_class()
    verdict.type = t
    if t == 3 and g.order >= 3:
        verdict.subtype = f"3.{g.phi_class()}"
    if Omega.mode != EXPRESSION_MODE:
        verdict.reason = "jet input: constancy cannot be probed"
        return verdict
    certified = True
    for p in probe_points(point, probe, rng):
        try:
            h = Germ(Omega, p, 3 if verdict.subtype else 2, backend, bindings)
            if h.rank < 4:
                entry = {"point": p, "class": None, "rank": h.rank, "backend": h.backend}
                certified = False
            else:
                entry = {"point": p, "class": h.omega_class(), "backend": h.backend}
                if verdict.subtype:
                    entry["phi_class"] = h.phi_class()
                    certified &= f"3.{entry['phi_class']}" == verdict.subtype
                certified &= entry["class"] == t
        except TranscendenceError as exc:
            entry = {"point": p, "class": None, "error": str(exc)}
            certified = False
        verdict.sample_report.append(entry)
    verdict.constancy_certified = certified
    return verdict


# ---------------------------------------------------------------------------
# finer type-3 conditions on F


def classify_type3_given_F(F, bindings=None) -> str:
    """Subtype label for ``F^{-1}(exp((1+x1) x3) dx1^dx2 + dx3^dx4)`` read off ``F``.

    Returns one of ``"3.0"``, ``"3.1-compatible"``, ``"3.2-compatible"``,
    ``"3.3"``, ``"3.4"`` or ``"Indeterminate"``.  The conditions are stated in
    adapted coordinates, so a compatible label is a sufficient reading rather
    than a full decision.
    """
    F = calculus.bind(as_expression(F), bindings)
    at0 = lambda e: calculus.eval_jet(e, (0, 0, 0, 0), 0, None, EXACT_EXP).value  # noqa: E731
    if at0(F) != 1:
        raise ValueError(f"F must satisfy F(0) = 1, got {format_scalar(at0(F))}")
    d = calculus.symbolic_derive
    F2, F4 = d(F, 2), d(F, 4)
    F22, F24, F44 = d(F2, 2), d(F2, 4), d(F4, 4)
    unknown = False

    def ident(e):
        nonlocal unknown
        v = is_zero(e).status
        if v == UNKNOWN_VERDICT:
            unknown = True
        return v == ZERO_VERDICT

    z2, z4 = ident(F2), ident(F4)
    if z2 and z4:
        return "3.0"
    if ident(calculus.sub(F, calculus.add(Const(1), Var(4)))):
        return "3.1-compatible"
    if z4:
        return "3.2-compatible"
    hess0 = at0(F22) * at0(F44) - at0(F24) ** 2
    if hess0 != 0:
        return "3.4"
    a = at0(F2) * at0(F24) - at0(F4) * at0(F22)
    b = at0(F2) * at0(F44) - at0(F4) * at0(F24)
    if (a != 0 or b != 0) and ident(calculus.sub(calculus.mul(F22, F44), calculus.power(F24, 2))):
        return "3.3"
    return INDETERMINATE
