"""The canonical frame of a type-4 two-form and the equivalence test built on it.

From ``i_Z Omega = omega`` and ``i_T Omega = phi`` come ``U = [Z, T]``,
``V = [Z, U]`` and the invariant ``J = phi(U)``.  Normalising gives the frame
``(Z, T', U', V')`` on which ``Omega`` has constant matrix; the structure
functions of that frame and their frame derivatives are the invariants that
:func:`decide_equivalence` compares.

Order budget for ``Omega`` of jet order ``D``: ``Z`` has order ``D-1``, ``T``
``D-2``, ``U`` and ``J`` ``D-3``, ``V``, ``Z(J)`` and the primed frame ``D-4``,
structure functions ``D-5``; each signature level costs one more.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from . import linalg
from .analysis import Germ, INDETERMINATE
from .errors import DegenerateFormError, FrameDegenerateError, OrderBudgetError, TranscendenceError
from .exterior import (
    DifferentialForm,
    VectorField,
    evaluate,
    exterior_derivative,
    interior_product,
    lie_bracket,
    lie_derivative,
    wedge,
)
from .jets import EXACT, FLOAT, NVARS, TruncatedSeries, format_scalar, to_scalar

FRAME_ORDER_COST = 5
DEFAULT_EQUIV_ORDER = 2
DEFAULT_FLOAT_TOLERANCE = 1e-7

EQUIVALENT = "Equivalent-to-order-r"
INEQUIVALENT = "Inequivalent"


def _germ(Omega, point, order, backend, bindings) -> Germ:
    if isinstance(Omega, Germ):
        return Omega
    return Germ(Omega, point, order, backend, bindings)


def solve_contraction(g: Germ, one_form: DifferentialForm) -> VectorField:
    """The unique ``X`` with ``i_X Omega = one_form``."""
    g.require_rank4()
    order = min(g.order, one_form.order)
    F = g.Omega.matrix()
    # (i_X Omega)_j = sum_i X^i F_ij
    mat = [[F[i][j].truncate(order) for i in range(NVARS)] for j in range(NVARS)]
    rhs = [one_form.coeffs[(j,)].truncate(order) for j in range(1, NVARS + 1)]
    return VectorField(linalg.series_solve(mat, rhs), g.point)


def solve_Z(Omega, point=(0, 0, 0, 0), order: int = 3, backend: str = EXACT, bindings=None) -> VectorField:
    g = _germ(Omega, point, order, backend, bindings)
    return g._get("Z", lambda: solve_contraction(g, g.omega))


def solve_T(Omega, point=(0, 0, 0, 0), order: int = 4, backend: str = EXACT, bindings=None) -> VectorField:
    g = _germ(Omega, point, order, backend, bindings)
    return g._get("T", lambda: solve_contraction(g, g.phi))


@dataclass
class FrameData:
    Z: VectorField
    T: VectorField
    U: VectorField
    V: VectorField
    J: object
    ZJ: object
    OmegaUV: object
    Tp: VectorField
    Up: VectorField
    Vp: VectorField
    Lambda: list
    frame_volume: object
    J_series: TruncatedSeries = field(repr=False, default=None)
    backend: str = EXACT

    @property
    def frame(self) -> tuple[VectorField, ...]:
        """The normalised frame ``(X1, X2, X3, X4) = (Z, T', U', V')``."""
        return (self.Z, self.Tp, self.Up, self.Vp)

    def primed_table(self, Omega: DifferentialForm) -> dict[str, object]:
        """``Omega`` on pairs of the normalised frame, evaluated at the point."""
        X = dict(zip(("Z", "Tp", "Up", "Vp"), self.frame))
        pairs = [("Z", "Tp"), ("Z", "Up"), ("Z", "Vp"), ("Tp", "Up"), ("Tp", "Vp"), ("Up", "Vp")]
        return {f"{a},{b}": evaluate(Omega, X[a], X[b]).value for a, b in pairs}


def build_frame(Omega, point=(0, 0, 0, 0), order: int = 5, backend: str = EXACT, bindings=None) -> FrameData:
    """All frame data at the point; needs jet order >= 5."""
    g = _germ(Omega, point, order, backend, bindings)
    g.require_rank4()
    if g.order < FRAME_ORDER_COST - 1:
        raise OrderBudgetError("build_frame", g.order, FRAME_ORDER_COST - 1 - g.order)

    def build():
        Z = solve_Z(g)
        T = solve_T(g)
        U = lie_bracket(Z, T)
        V = lie_bracket(Z, U)
        J = evaluate(g.phi, U)
        if J.value == 0:
            raise FrameDegenerateError("J vanishes at the point: the frame is not independent")
        ZJ = Z.apply(J)
        OUV = evaluate(g.Omega, U, V)
        Jinv = J.reciprocal()
        Tp = T - Z.scale(ZJ * Jinv)
        Up = U.scale(Jinv) - Z.scale(OUV * Jinv * Jinv)
        Vp = V.scale(Jinv)
        fields = (Z, T, U, V)
        Lam = [[evaluate(g.Omega, a, b).value if a is not b else to_scalar(0, g.backend) for b in fields] for a in fields]
        vol = linalg.det([[X[i].value for X in fields] for i in range(1, NVARS + 1)])
        if vol == 0:
            raise FrameDegenerateError("Z, T, U, V are dependent at the point")
        return FrameData(Z, T, U, V, J.value, ZJ.value, OUV.value, Tp, Up, Vp, Lam, vol, J, g.backend)

    return g._get("frame", build)


# ---------------------------------------------------------------------------
# identities


@dataclass
class IdentityResult:
    name: str
    applicable: bool
    residual: object = None
    order: int | None = None
    note: str | None = None

    @property
    def holds(self) -> bool | None:
        if not self.applicable:
            return None
        return _is_zero_scalar(self.residual)


def _is_zero_scalar(v) -> bool:
    if isinstance(v, float):
        return v == 0.0
    return v == 0


def _residual(obj, backend: str):
    """Largest coefficient (by magnitude) of a form, field or series."""
    if isinstance(obj, DifferentialForm):
        series = list(obj.coeffs.values())
    elif isinstance(obj, VectorField):
        series = list(obj.components)
    else:
        series = [obj]
    order = min(s.order for s in series)
    best = to_scalar(0, backend) if backend != FLOAT else 0.0
    best_abs = 0.0
    for s in series:
        for c in s.coeffs:
            a = abs(float(c))
            if c != 0 and (best_abs == 0.0 and _is_zero_scalar(best) or a > best_abs):
                best, best_abs = c, a
    if backend == FLOAT:
        return best_abs, order
    return best, order


IDENTITY_NAMES = (
    "Z_solves", "T_solves",
    "i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix",
    "formula1", "Omega_Z_T", "x", "xi", "xii", "xiii", "xiv",
)


def check_identities(Omega, point=(0, 0, 0, 0), order: int = 4, backend: str = EXACT, bindings=None) -> dict[str, IdentityResult]:
    """Residual of every attached-field identity; unmet hypotheses mark it inapplicable."""
    g = _germ(Omega, point, order, backend, bindings)
    g.require_rank4()
    be = g.backend
    O, dO, w, dw, phi = g.Omega, g.dOmega, g.omega, g.domega, g.phi
    I = g.I_series
    Z = solve_Z(g)
    T = solve_T(g)
    out: dict[str, IdentityResult] = {}

    def record(name, thunk, hypothesis=True, note=None):
        if not hypothesis:
            out[name] = IdentityResult(name, False, note=note)
            return
        try:
            res, o = _residual(thunk(), be)
            out[name] = IdentityResult(name, True, res, o)
        except OrderBudgetError as exc:
            out[name] = IdentityResult(name, False, note=str(exc))

    record("Z_solves", lambda: interior_product(Z, O) - w)
    record("T_solves", lambda: interior_product(T, O) - phi)
    record("i", lambda: wedge(w, dO))
    record("ii", lambda: wedge(dw, O))
    record("iii", lambda: interior_product(Z, dO))
    record("iv", lambda: lie_derivative(Z, O) - dw)
    record("v", lambda: wedge(phi, dO))
    dphi = exterior_derivative(phi) if phi.order >= 1 else None
    record("vi", lambda: wedge(dphi, O) - wedge(dw, dw), dphi is not None, "order budget")
    record("vii", lambda: phi + lie_derivative(Z, w))
    record("viii", lambda: wedge(phi, dw) + wedge(w, O).scale(I))
    record("ix", lambda: interior_product(T, dw) - w.scale(I))

    dO_nonzero = any(c.value != 0 for c in dO.coeffs.values())
    w_dw = wedge(w, dw)
    wdw_nonzero = any(c.value != 0 for c in w_dw.coeffs.values())
    budget = dphi is not None and g.order >= 3
    record(
        "formula1",
        lambda: wedge(dw, dphi) + wedge(O, O).scale(Z.apply(I) * to_scalar("1/2", be)),
        dO_nonzero and budget,
        "needs d Omega != 0 at the point" if not dO_nonzero else "order budget",
    )
    note = "needs omega ^ d omega != 0 at the point"
    record("Omega_Z_T", lambda: DifferentialForm(0, {(): evaluate(O, Z, T)}, g.point), wdw_nonzero, note)
    record("x", lambda: wedge(phi, w) - interior_product(T, dO), wdw_nonzero, note)
    record("xi", lambda: lie_derivative(T, O) - dphi - wedge(phi, w), wdw_nonzero and budget, note)
    TZ = lie_bracket(T, Z) if T.order >= 1 else None
    ok = wdw_nonzero and TZ is not None
    record("xii", lambda: interior_product(TZ, O) - w.scale(I) + lie_derivative(Z, phi), ok and budget, note)
    record(
        "xiii",
        lambda: wedge(interior_product(TZ, O), O) - wedge(dphi - O.scale(I), w),
        ok and budget,
        note,
    )
    record("xiv", lambda: DifferentialForm(0, {(): evaluate(w, TZ)}, g.point), ok, note)
    return out


# ---------------------------------------------------------------------------
# torsion signature


@dataclass
class InvariantSignature:
    """``levels[s][(i, js, k, l)]``: ``X_{j1}(...X_{js}(T^i_{kl}))`` at the point."""

    order: int
    levels: list[dict]
    backend: str = EXACT

    def entries(self):
        for s, level in enumerate(self.levels):
            for key in sorted(level):
                yield s, key, level[key]

    def size(self) -> int:
        return sum(len(level) for level in self.levels)


def structure_functions(frame, order_hint=None) -> dict[tuple[int, int], list[TruncatedSeries]]:
    """``c[(i, j)][k]`` with ``[X_i, X_j] = sum_k c^k_ij X_k`` (1-based, ``i < j``)."""
    X = list(frame)
    out = {}
    for i in range(NVARS):
        for j in range(i + 1, NVARS):
            br = lie_bracket(X[i], X[j])
            o = br.order
            mat = [[X[l][k].truncate(o) for l in range(NVARS)] for k in range(1, NVARS + 1)]
            rhs = [br[k] for k in range(1, NVARS + 1)]
            out[(i + 1, j + 1)] = linalg.series_solve(mat, rhs)
    return out


def torsion_levels(frame, r: int) -> list[dict]:
    """Torsion ``T^i_kl = -c^i_kl`` of the frame-parallel connection and its frame derivatives."""
    c = structure_functions(frame)
    X = list(frame)
    base = {}
    for (k, l), comps in c.items():
        for i in range(1, NVARS + 1):
            t = -comps[i - 1]
            base[(i, (), k, l)] = t
            base[(i, (), l, k)] = -t
    levels_series = [base]
    for s in range(1, r + 1):
        prev = levels_series[-1]
        if min(v.order for v in prev.values()) < 1:
            raise OrderBudgetError("invariant_signature", 0, r - s + 1)
        nxt = {}
        for (i, js, k, l), f in prev.items():
            if k > l:
                continue
            for j in range(1, NVARS + 1):
                v = X[j - 1].apply(f)
                nxt[(i, (j,) + js, k, l)] = v
                nxt[(i, (j,) + js, l, k)] = -v
        levels_series.append(nxt)
    return [{key: f.value for key, f in lvl.items()} for lvl in levels_series]


def invariant_signature(Omega, point=(0, 0, 0, 0), r: int = DEFAULT_EQUIV_ORDER, order: int | None = None,
                        backend: str = EXACT, bindings=None) -> InvariantSignature:
    """Levels ``0..r`` of the torsion invariants; needs jet order ``5 + r``."""
    need = FRAME_ORDER_COST + r
    g = _germ(Omega, point, order if order is not None else need, backend, bindings)
    if g.order < need:
        raise OrderBudgetError("invariant_signature", g.order, need - g.order)
    fd = build_frame(g)
    return InvariantSignature(r, torsion_levels(fd.frame, r), g.backend)


@dataclass
class EquivalenceVerdict:
    status: str
    order: int
    witness: dict | None = None
    sizes: tuple[int, int] = (0, 0)
    reason: str | None = None


def _values_equal(a, b, tol: float | None) -> bool:
    if tol is None:
        return a == b
    fa, fb = float(a), float(b)
    return abs(fa - fb) <= tol * max(1.0, abs(fa), abs(fb))


def decide_equivalence(Omega1, point1, Omega2, point2, r: int = DEFAULT_EQUIV_ORDER,
                       tolerance: float = DEFAULT_FLOAT_TOLERANCE, backend: str = EXACT,
                       bindings1=None, bindings2=None) -> EquivalenceVerdict:
    """Compare torsion signatures up to level ``r`` (a finite-order certificate)."""
    sigs = []
    for Om, p, b in ((Omega1, point1, bindings1), (Omega2, point2, bindings2)):
        try:
            g = _germ(Om, p, FRAME_ORDER_COST + r, backend, b)
            if g.rank < 4:
                return EquivalenceVerdict(INDETERMINATE, r, reason=f"rank {g.rank} < 4")
            if g.omega_class() < 4:
                return EquivalenceVerdict(INDETERMINATE, r, reason="not of type 4 at the point")
            sigs.append(invariant_signature(g, r=r))
        except (FrameDegenerateError, DegenerateFormError, TranscendenceError) as exc:
            return EquivalenceVerdict(INDETERMINATE, r, reason=str(exc))
    s1, s2 = sigs
    tol = tolerance if FLOAT in (s1.backend, s2.backend) else None
    for level in range(r + 1):
        a, b = s1.levels[level], s2.levels[level]
        for key in sorted(a):
            if not _values_equal(a[key], b[key], tol):
                i, js, k, l = key
                return EquivalenceVerdict(
                    INEQUIVALENT, r,
                    witness={"level": level, "i": i, "j": list(js), "k": k, "l": l,
                             "left": format_scalar(a[key]), "right": format_scalar(b[key])},
                    sizes=(s1.size(), s2.size()),
                )
    return EquivalenceVerdict(EQUIVALENT, r, sizes=(s1.size(), s2.size()))


# ---------------------------------------------------------------------------
# tabulated example: computed values against the printed ones


def example18_crosscheck(c, lam, order: int = 5) -> list[dict]:
    """One pass/fail record per tabulated quantity of the six-coefficient family at the origin.

    ``omega`` and ``phi`` are compared as jets; the frame vectors and the
    determinant as values, the determinant up to overall sign.  Computed
    values come from the defining equations, never from the table.
    """
    from .models import ModelSpec, example18_generic, example18_printed, instantiate

    printed = example18_printed(c, lam)
    g = Germ(instantiate(ModelSpec("Example18", {"c": c, "lambda": lam})), (0, 0, 0, 0), order)
    log: list[dict] = []

    def add(quantity, component, computed, expected, ok):
        log.append({
            "c": str(c), "lambda": str(lam), "quantity": quantity, "component": component,
            "computed": computed, "printed": expected, "pass": bool(ok),
        })

    for name, form in (("omega", g.omega), ("phi", g.phi)):
        for i, expr in enumerate(printed[name], start=1):
            mine = form.coeffs[(i,)]
            try:
                theirs = eval_printed(expr, mine.order, g.backend)
                ok = list(mine.coeffs) == list(theirs.coeffs)
                shown = format_scalar(theirs.value)
            except Exception as exc:  # a pole in the printed formula at the origin
                ok, shown = False, f"undefined ({exc})"
            add(name, i, format_scalar(mine.value), shown, ok)
    generic = example18_generic(c, lam)
    try:
        fd = build_frame(g)
    except FrameDegenerateError as exc:
        add("frame", "all", f"degenerate ({exc})", "generic" if generic else "excluded", not generic)
        return log
    for name in ("Z", "T", "U", "V"):
        vals = getattr(fd, name).value_at()
        for i, (mine, theirs) in enumerate(zip(vals, printed[name]), start=1):
            add(name, i, format_scalar(mine), format_scalar(to_scalar(theirs, g.backend)), mine == theirs)
    vol = fd.frame_volume
    add("frame_volume", "det", format_scalar(vol), format_scalar(to_scalar(printed["det"], g.backend)),
        vol == printed["det"] or vol == -printed["det"])
    add("frame_volume", "nonzero_iff_generic", str(vol != 0), str(generic), (vol != 0) == generic)
    return log


def eval_printed(expr, order: int, backend: str) -> TruncatedSeries:
    from .expr.calculus import eval_jet

    return eval_jet(expr, (0, 0, 0, 0), order, None, backend)


def example18_log(cs=(1, 2, 3), lams=(1, 2, 3), order: int = 5) -> list[dict]:
    return [rec for c, lam in product(cs, lams) for rec in example18_crosscheck(c, lam, order)]
