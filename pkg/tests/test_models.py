from __future__ import annotations

import random

import pytest

from formgerms.analysis import ProbeSettings
from formgerms.expr import evaluate, parse_expression as P
from formgerms.expr.calculus import sub
from formgerms.expr.zerotest import is_zero
from formgerms.models import (
    ModelSpec,
    check_system,
    coefficients,
    example18_generic,
    instantiate,
    random_prop51_spec,
    solve_prop51,
    system_residuals,
    verify_model_types,
)

ORIGIN = (0, 0, 0, 0)


def same(a, b) -> bool:
    return is_zero(sub(P(a) if isinstance(a, str) else a, P(b) if isinstance(b, str) else b)).is_zero


def test_type1_instantiation():
    c = coefficients(ModelSpec("Type1"))
    assert same(c["F12"], "exp(x3)") and same(c["F34"], "1")
    assert all(same(c[k], "0") for k in ("F13", "F14", "F23", "F24"))


def test_example51_with_a_equal_x3_is_type1():
    a = instantiate(ModelSpec("Example51", {"a": "x3", "b": "0"})).to_jet(ORIGIN, 4)
    b = instantiate(ModelSpec("Type1")).to_jet(ORIGIN, 4)
    assert a == b


def test_example18_table():
    c = coefficients(ModelSpec("Example18", {"c": 1, "lambda": 1}))
    assert same(c["F24"], "1/2*x3^2 - x1 - 1/2*x1^2")
    assert same(c["F34"], "-(1+x1)")
    assert same(c["F13"], "exp((1+x1)*x2 + x3*x4)")


@pytest.mark.parametrize(
    "family, params",
    [
        ("Type3", {"f": "x4 + 1"}),
        ("FinerType3", {"F": "2 + x4"}),
        ("Nope", {}),
        ("Example51", {"a": "x1"}),
    ],
)
def test_model_spec_validation(family, params):
    with pytest.raises(ValueError):
        instantiate(ModelSpec(family, params))


def test_model_spec_json_round_trip():
    spec = ModelSpec("Example18", {"c": "2", "lambda": "1/3"})
    assert ModelSpec.from_json(spec.to_json()) == spec


def test_prop51_zero_solution():
    sol = solve_prop51(0, 0)
    assert all(same(v, "0") for v in sol.values())


def test_prop51_constant_F12():
    sol = solve_prop51(1, 0)
    assert same(sol["F14"], "0") and same(sol["F23"], "0")
    # x1*x3 from the x1-integration, x3 from the x1 = 0 boundary term in G24
    assert same(sol["F24"], "x1*x3 + x3")
    assert same(solve_prop51(1, 0, printed_g24=True)["F24"], "x1*x3")
    rep = check_system({"F12": P("1"), **sol, "F13": P("0"), "F34": P("-1")})
    assert {v["verdict"] for v in rep.values()} == {"Zero"}


def test_prop51_rejects_non_polynomials():
    with pytest.raises(ValueError):
        solve_prop51(P("exp(x1)"), 0)


def test_generated_families_satisfy_the_system():
    rng = random.Random(21)
    for _ in range(10):
        rep = check_system(coefficients(random_prop51_spec(rng, 2)))
        assert {v["verdict"] for v in rep.values()} == {"Zero"}


def test_printed_g24_breaks_the_fourth_equation():
    coeffs = {"F12": P("1"), "F13": P("0"), **solve_prop51(1, 0, printed_g24=True), "F34": P("-1")}
    rep = check_system(coeffs)
    assert rep["e4"]["verdict"] == "NonZero"
    assert rep["e1"]["verdict"] == rep["e2"]["verdict"] == rep["e3"]["verdict"] == "Zero"


def test_single_term_residual():
    coeffs = {"F12": P("1+x1"), "F34": P("-(1+x1)")}
    e3 = system_residuals(coeffs)["e3"]
    assert evaluate(e3, (1, 2, 3, 4)) == -1
    assert check_system(coeffs)["e3"]["verdict"] == "NonZero"


def test_example18_fails_the_system():
    rep = check_system(coefficients(ModelSpec("Example18", {"c": 1, "lambda": 1})))
    assert rep["F34_plus_F12"]["verdict"] == "Zero"
    assert any(rep[k]["verdict"] == "NonZero" for k in ("e1", "e2", "e3", "e4"))


@pytest.mark.parametrize("c, lam, generic", [(1, 1, True), (0, 1, False), (1, 0, False), (1, -1, False), (2, 3, True)])
def test_example18_genericity(c, lam, generic):
    assert example18_generic(c, lam) is generic


def test_builtin_model_types():
    rows = verify_model_types(ProbeSettings(count=4))
    bad = [r for r in rows if not r["ok"]]
    assert not bad, bad
