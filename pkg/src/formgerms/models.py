"""Normal-form families of 2-forms and the polynomial type-4 generator.

``instantiate`` turns a :class:`ModelSpec` into an expression-mode 2-form.
``solve_prop51`` builds polynomial solutions of the system that forces
``omega = (1 + x1) dx2 + x3 dx4``; ``check_system`` evaluates that system.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .analysis import ProbeSettings, determine_type
from .exterior import DifferentialForm
from .expr import calculus
from .expr.calculus import add, mul, neg, sub
from .expr.nodes import ONE, Const, Exp, Expression, Var, as_expression
from .expr.zerotest import is_zero, polynomial_expression, polynomial_terms
from .jets import EXACT_EXP

FAMILIES = (
    "Darboux0",
    "Type1",
    "Type2",
    "Type3",
    "FinerType3",
    "Example36",
    "Example51",
    "Example18",
    "Prop51",
)

_PARAMS = {
    "Darboux0": (),
    "Type1": (),
    "Type2": (),
    "Type3": ("f",),
    "FinerType3": ("F",),
    "Example36": ("lambda",),
    "Example51": ("a", "b"),
    "Example18": ("c", "lambda"),
    "Prop51": ("F12", "F13", "G14", "G23", "G24t"),
}

x1, x2, x3, x4 = Var(1), Var(2), Var(3), Var(4)
HALF = Const(Fraction(1, 2))


def _value_at_origin(e: Expression):
    return calculus.eval_jet(e, (0, 0, 0, 0), 0, None, EXACT_EXP).value


@dataclass(frozen=True)
class ModelSpec:
    """A named family plus its parameters (expressions, or rationals for Example18)."""

    family: str
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        missing = [p for p in _PARAMS[self.family] if p not in self.params]
        extra = [p for p in self.params if p not in _PARAMS[self.family]]
        if self.family == "Prop51":
            missing = [p for p in missing if p not in ("G14", "G23", "G24t")]
        if missing or extra:
            raise ValueError(f"{self.family} takes parameters {_PARAMS[self.family]}; missing {missing}, unexpected {extra}")
        conv = {}
        for k, v in self.params.items():
            conv[k] = Fraction(v) if self.family == "Example18" else as_expression(v)
        object.__setattr__(self, "params", conv)

    def param(self, name, default=None):
        return self.params.get(name, default)

    def to_json(self) -> dict:
        return {"family": self.family, "params": {k: str(v) for k, v in self.params.items()}}

    @classmethod
    def from_json(cls, doc: Mapping) -> "ModelSpec":
        if not isinstance(doc, Mapping) or "family" not in doc:
            raise ValueError("a model spec needs a 'family' field")
        return cls(doc["family"], dict(doc.get("params", {})))


def _type2_part(scale: Expression | None = None) -> dict:
    f12 = Exp(mul(add(ONE, x1), x3))
    if scale is None:
        return {"F12": f12, "F34": ONE}
    return {"F12": mul(scale, f12), "F34": scale}


def coefficients(spec: ModelSpec) -> dict[str, Expression]:
    """The six coefficients ``F12 .. F34`` of the model (missing ones are zero)."""
    fam = spec.family
    if fam == "Darboux0":
        out = {"F12": ONE, "F34": ONE}
    elif fam == "Type1":
        out = {"F12": Exp(x3), "F34": ONE}
    elif fam == "Type2":
        out = _type2_part()
    elif fam == "Type3":
        f = spec.param("f")
        if _value_at_origin(f) != 0:
            raise ValueError("Type3 needs f(0) = 0")
        out = _type2_part(Exp(f))
    elif fam == "FinerType3":
        F = spec.param("F")
        if _value_at_origin(F) != 1:
            raise ValueError("FinerType3 needs F(0) = 1")
        out = _type2_part(calculus.div(ONE, F))
    elif fam == "Example36":
        lam = spec.param("lambda")
        out = {"F12": Exp(add(x4, mul(add(ONE, x1), x3))), "F34": Exp(lam)}
    elif fam == "Example51":
        out = {"F12": Exp(spec.param("a")), "F34": Exp(spec.param("b"))}
    elif fam == "Example18":
        c, lam = Const(spec.param("c")), Const(spec.param("lambda"))
        f12 = add(ONE, x1)
        out = {
            "F12": f12,
            "F13": mul(c, Exp(add(mul(add(ONE, x1), x2), mul(x3, x4)))),
            "F14": ONE,
            "F23": neg(lam),
            "F24": sub(sub(mul(mul(HALF, lam), calculus.power(x3, 2)), x1), mul(HALF, calculus.power(x1, 2))),
            "F34": neg(f12),
        }
    elif fam == "Prop51":
        sol = solve_prop51(
            spec.param("F12"), spec.param("F13"), spec.param("G14", Const(0)),
            spec.param("G23", Const(0)), spec.param("G24t", Const(0)),
        )
        out = {"F12": spec.param("F12"), "F13": spec.param("F13"), **sol, "F34": neg(spec.param("F12"))}
    else:  # pragma: no cover - guarded by ModelSpec
        raise ValueError(fam)
    full = {k: Const(0) for k in ("F12", "F13", "F14", "F23", "F24", "F34")}
    full.update(out)
    return full


def form_from_coefficients(coeffs: Mapping[str, object]) -> DifferentialForm:
    return DifferentialForm(2, {(int(k[1]), int(k[2])): as_expression(v) for k, v in coeffs.items()})


def instantiate(spec: ModelSpec) -> DifferentialForm:
    """Expression-mode 2-form of the model."""
    return form_from_coefficients(coefficients(spec))


# ---------------------------------------------------------------------------
# polynomial solutions


def _p_derive(p: dict, axis: int) -> dict:
    out = {}
    for m, c in p.items():
        k = m[axis - 1]
        if k:
            t = list(m)
            t[axis - 1] -= 1
            out[tuple(t)] = out.get(tuple(t), 0) + c * k
    return {m: c for m, c in out.items() if c}


def _p_integrate(p: dict, axis: int) -> dict:
    """Antiderivative in ``x_axis`` vanishing at ``x_axis = 0``."""
    out = {}
    for m, c in p.items():
        t = list(m)
        t[axis - 1] += 1
        out[tuple(t)] = Fraction(c) / t[axis - 1]
    return out


def _p_restrict_zero(p: dict, axis: int) -> dict:
    return {m: c for m, c in p.items() if m[axis - 1] == 0}


def _p_lin(*pairs) -> dict:
    """``sum coeff * poly`` for ``(coeff, poly)`` pairs, coeff a polynomial dict."""
    out: dict = {}
    for a, p in pairs:
        for ma, ca in a.items():
            for mp, cp in p.items():
                m = tuple(u + v for u, v in zip(ma, mp))
                out[m] = out.get(m, 0) + ca * cp
    return {m: c for m, c in out.items() if c}


_ONE = {(0, 0, 0, 0): Fraction(1)}
_X3 = {(0, 0, 1, 0): Fraction(1)}
_MINUS = {(0, 0, 0, 0): Fraction(-1)}
_NEG_ONE_PLUS_X1 = {(0, 0, 0, 0): Fraction(-1), (1, 0, 0, 0): Fraction(-1)}
_NEG_X3 = {(0, 0, 1, 0): Fraction(-1)}


def _poly(e, name: str, allowed: tuple[int, ...] | None = None) -> dict:
    try:
        p = polynomial_terms(as_expression(e))
    except ValueError:
        raise ValueError(f"{name} must be a polynomial, got {e}") from None
    if allowed is not None:
        for m in p:
            if any(m[i - 1] for i in range(1, 5) if i not in allowed):
                raise ValueError(f"{name} may depend only on x{', x'.join(map(str, allowed))}")
    return p


def solve_prop51(F12, F13, G14=0, G23=0, G24t=0, printed_g24: bool = False) -> dict[str, Expression]:
    """Polynomial ``F14, F23, F24`` solving the type-4 system for given ``F12, F13``.

    ``G14(x1, x2, x4)``, ``G23(x2, x3, x4)`` and ``G24t(x2, x4)`` are the free
    functions.  ``G24`` is the ``x3``-antiderivative of
    ``G23_4 - x3 G23 + (F12 - F12_2)|_{x1=0}``.  The last term is what the
    fourth equation leaves behind at ``x1 = 0``; ``printed_g24=True`` omits it,
    which generally breaks that equation (kept for comparison runs).
    """
    f12, f13 = _poly(F12, "F12"), _poly(F13, "F13")
    g14 = _poly(G14, "G14", (1, 2, 4))
    g23 = _poly(G23, "G23", (2, 3, 4))
    g24t = _poly(G24t, "G24t", (2, 4))
    d = _p_derive
    # F14 = int_0^x3 [(X4 - x3) F13 - X1 F12] dx3 + G14
    f14 = _p_lin((_ONE, _p_integrate(_p_lin((_ONE, d(f13, 4)), (_NEG_X3, f13), (_MINUS, d(f12, 1))), 3)), (_ONE, g14))
    # F23 = int_0^x1 [(X2 - 1 - x1) F13 - X3 F12] dx1 + G23
    f23 = _p_lin(
        (_ONE, _p_integrate(_p_lin((_ONE, d(f13, 2)), (_NEG_ONE_PLUS_X1, f13), (_MINUS, d(f12, 3))), 1)),
        (_ONE, g23),
    )
    # G24 = int_0^x3 [G23_4 - x3 G23 + (F12 - F12_2)|x1=0] dx3 + G24t
    g24_integrand = _p_lin((_ONE, d(g23, 4)), (_NEG_X3, g23))
    if not printed_g24:
        g24_integrand = _p_lin(
            (_ONE, g24_integrand), (_ONE, _p_restrict_zero(f12, 1)), (_MINUS, _p_restrict_zero(d(f12, 2), 1))
        )
    g24 = _p_lin((_ONE, _p_integrate(g24_integrand, 3)), (_ONE, g24t))
    # F24 = int_0^x1 [(x3 - X4) F12 + (X2 - 1 - x1) F14] dx1 + G24
    f24 = _p_lin(
        (_ONE, _p_integrate(_p_lin((_X3, f12), (_MINUS, d(f12, 4)), (_ONE, d(f14, 2)), (_NEG_ONE_PLUS_X1, f14)), 1)),
        (_ONE, g24),
    )
    return {"F14": polynomial_expression(f14), "F23": polynomial_expression(f23), "F24": polynomial_expression(f24)}


def random_polynomial(rng: random.Random, degree: int = 2, variables=(1, 2, 3, 4), coeff_range: int = 3,
                      density: float = 0.6) -> Expression:
    """Random polynomial with small integer coefficients in the given variables."""
    from .jets import monomials

    terms = {}
    for m in monomials(degree):
        if any(m[i - 1] for i in range(1, 5) if i not in variables):
            continue
        if rng.random() < density:
            c = rng.randint(-coeff_range, coeff_range)
            if c:
                terms[m] = Fraction(c)
    return polynomial_expression(terms)


def random_prop51_spec(rng: random.Random, degree: int = 2) -> ModelSpec:
    return ModelSpec(
        "Prop51",
        {
            "F12": random_polynomial(rng, degree),
            "F13": random_polynomial(rng, degree),
            "G14": random_polynomial(rng, degree, (1, 2, 4)),
            "G23": random_polynomial(rng, degree, (2, 3, 4)),
            "G24t": random_polynomial(rng, degree, (2, 4)),
        },
    )


# ---------------------------------------------------------------------------
# the system itself


SYSTEM_NAMES = ("e1", "e2", "e3", "e4", "prolongation")


def system_residuals(coeffs: Mapping[str, object]) -> dict[str, Expression]:
    """``e1..e4`` and the first-prolongation constraint as expressions."""
    F = {k: as_expression(coeffs.get(k, 0)) for k in ("F12", "F13", "F14", "F23", "F24", "F34")}
    D = calculus.symbolic_derive
    p1 = add(ONE, x1)
    e1 = sub(sub(sub(D(F["F13"], 2), mul(p1, F["F13"])), D(F["F12"], 3)), D(F["F23"], 1))
    e2 = add(add(sub(sub(D(F["F12"], 4), mul(x3, F["F12"])), D(F["F14"], 2)), mul(p1, F["F14"])), D(F["F24"], 1))
    e3 = sub(sub(sub(D(F["F13"], 4), mul(x3, F["F13"])), D(F["F12"], 1)), D(F["F14"], 3))
    e4 = add(add(sub(sub(D(F["F12"], 2), mul(p1, F["F12"])), D(F["F23"], 4)), mul(x3, F["F23"])), D(F["F24"], 3))
    pro = sub(
        add(
            sub(
                add(sub(mul(p1, D(F["F12"], 1)), mul(x3, D(F["F12"], 3))), mul(x3, D(F["F13"], 2))),
                mul(p1, D(F["F13"], 4)),
            ),
            mul(p1, D(F["F14"], 3)),
        ),
        mul(x3, D(F["F23"], 1)),
    )
    return {"e1": e1, "e2": e2, "e3": e3, "e4": e4, "prolongation": pro}


def check_system(coeffs: Mapping[str, object], bindings=None) -> dict:
    """Zero-test verdicts for ``e1..e4``, the constraint and ``F34 + F12``."""
    res = system_residuals(coeffs)
    report = {}
    for name, e in res.items():
        v = is_zero(e, bindings)
        report[name] = {"verdict": v.status, "witness": None if v.witness is None else [str(w) for w in v.witness]}
    pre = add(as_expression(coeffs.get("F34", 0)), as_expression(coeffs.get("F12", 0)))
    v = is_zero(pre, bindings)
    report["F34_plus_F12"] = {"verdict": v.status, "witness": None if v.witness is None else [str(w) for w in v.witness]}
    return report


# ---------------------------------------------------------------------------
# fixtures


def builtin_models() -> list[tuple[str, ModelSpec, dict]]:
    """``(name, spec, expected)`` for every model with a claimed type."""
    return [
        ("darboux", ModelSpec("Darboux0"), {"type": 0}),
        ("type1", ModelSpec("Type1"), {"type": 1}),
        ("type2", ModelSpec("Type2"), {"type": 2}),
        ("type3_f_ln", ModelSpec("Type3", {"f": "ln(1/(1+x4))"}), {"type": 3, "subtype": "3.1"}),
        ("type3_F_1+x4", ModelSpec("FinerType3", {"F": "1+x4"}), {"type": 3, "subtype": "3.1"}),
        ("example36_const", ModelSpec("Example36", {"lambda": "1/2"}), {"type": 3, "phi_class": 1}),
        ("example36_x1x3x4", ModelSpec("Example36", {"lambda": "x1*x3*x4"}), {"type": 3, "phi_class": 2}),
    ]


def example36_rho(lam) -> Expression:
    """``rho = 1 - lambda_13 + (1 + x1) lambda_14``."""
    lam = as_expression(lam)
    D = calculus.derive_multi
    return add(sub(ONE, D(lam, (1, 3))), mul(add(ONE, x1), D(lam, (1, 4))))


def verify_model_types(probe: ProbeSettings | None = None) -> list[dict]:
    """Run the type classifier on every built-in model and compare with the claim."""
    rows = []
    for name, spec, expected in builtin_models():
        v = determine_type(instantiate(spec), probe=probe)
        got = {"type": v.type, "subtype": v.subtype}
        if "phi_class" in expected:
            got["phi_class"] = int(v.subtype[2]) if v.subtype else None
        ok = all(got.get(k) == val for k, val in expected.items())
        row = {"model": name, "expected": expected, "got": got, "certified": v.constancy_certified, "ok": ok}
        if spec.family == "Example36":
            rho0 = _value_at_origin(example36_rho(spec.param("lambda")))
            row["rho_at_origin"] = str(rho0)
            row["ok"] = ok and rho0 != 0
        rows.append(row)
    return rows


def example18_printed(c, lam) -> dict:
    """The tabulated omega, phi and frame values for the six-coefficient family, as printed.

    ``omega`` and ``phi`` are expression germs; ``Z``..``V`` and ``det`` are
    values at the origin.
    """
    c, l = Fraction(c), Fraction(lam)
    coeffs = coefficients(ModelSpec("Example18", {"c": c, "lambda": l}))
    F13, F24 = coeffs["F13"], coeffs["F24"]
    den = add(Const(l), mul(F13, F24))
    div = calculus.div
    p1 = add(ONE, x1)
    L = l + 1
    return {
        "omega": [Const(0), p1, Const(0), x3],
        "phi": [
            div(mul(x3, F13), den),
            div(neg(mul(Const(l), x3)), den),
            neg(div(mul(p1, F13), den)),
            neg(div(p1, den)),
        ],
        "Z": [Fraction(0), -l / L, Fraction(0), -1 / L],
        "T": [-c / L**2, (l - 1) / L**2, c * l / L**2, (c**2 + 2) / L**2],
        "U": [
            c / L**2,
            -c * l * (2 * l + c) / L**4,
            -c * l**2 / L**3,
            -c * ((2 * c - 1) * l**2 + (2 * c + 1) * l + c) / L**4,
        ],
        "V": [
            -c / L**2,
            c * l * (4 * l**2 + (3 * c + 1) * l + c - 1) / L**5,
            c * l**3 / L**4,
            c * (2 * (2 * c - 1) * l**3 + 2 * (2 * c + 1) * l**2 + (3 * c + 2) * l + c) / L**5,
        ],
        "det": -c**2 * l**2 * ((c**2 + 1) * l**2 + (c - c**2 + 2) * l + c + 1) / L**10,
    }


def example18_generic(c, lam) -> bool:
    """Outside the excluded parameter set ``c = 0``, ``lambda in {0, -1}`` and the quadratic's roots."""
    c, l = Fraction(c), Fraction(lam)
    return c != 0 and l not in (0, -1) and (c**2 + 1) * l**2 + (c - c**2 + 2) * l + c + 1 != 0
