from __future__ import annotations

import random
from fractions import Fraction

import pytest

from support import ORIGIN, rational_point, type4_instance

from formgerms.analysis import INDETERMINATE, Germ
from formgerms.errors import FrameDegenerateError, OrderBudgetError
from formgerms.exterior import VectorField, interior_product
from formgerms.frame import (
    EQUIVALENT,
    INEQUIVALENT,
    build_frame,
    check_identities,
    decide_equivalence,
    example18_crosscheck,
    invariant_signature,
    solve_T,
    solve_Z,
    structure_functions,
)
from formgerms.jets import FLOAT
from formgerms.models import ModelSpec, instantiate


def ex18(c=1, lam=1):
    return instantiate(ModelSpec("Example18", {"c": c, "lambda": lam}))


def model(family, **params):
    return instantiate(ModelSpec(family, params))


def test_Z_of_closed_form_is_zero():
    assert solve_Z(model("Darboux0"), ORIGIN, 3).is_zero()


def test_Z_of_type1_model():
    Z = solve_Z(model("Type1"), ORIGIN, 3)
    assert Z == VectorField([0, 0, 0, -1]).to_jet(ORIGIN, 2)


@pytest.mark.parametrize("family", ["Type1", "Type2"])
def test_T_vanishes_for_types_one_and_two(family):
    assert solve_T(model(family), ORIGIN, 4).is_zero()


def test_T_solves_contraction_for_example36():
    g = Germ(model("Example36", **{"lambda": "x1*x3*x4"}), ORIGIN, 4)
    T = solve_T(g)
    assert (interior_product(T, g.Omega) - g.phi).is_zero()


def test_frame_needs_nonzero_J_and_enough_order():
    with pytest.raises(FrameDegenerateError):
        build_frame(model("Type1"), ORIGIN, 5)
    with pytest.raises(OrderBudgetError):
        build_frame(ex18(), ORIGIN, 3)


def test_frame_volume_is_J_squared_over_pfaffian():
    g = Germ(ex18(2, 3), ORIGIN, 5)
    fd = build_frame(g)
    assert fd.frame_volume * g.pf.value == fd.J**2


def test_identities_on_closed_form():
    res = check_identities(model("Darboux0"), ORIGIN, 4)
    for name in ("i", "ii", "iii", "iv"):
        assert res[name].applicable and res[name].holds
    for name in ("formula1", "x", "xi", "xii", "xiii", "xiv", "Omega_Z_T"):
        assert not res[name].applicable and res[name].holds is None


def test_identities_on_example51_at_random_points():
    rng = random.Random(9)
    form = model("Example51", a="x1*x3+x2*x4+x1^2*x2", b="x3*x4")
    for _ in range(3):
        res = check_identities(form, rational_point(rng, Fraction(1, 4)), 4)
        for name in ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"):
            assert res[name].applicable and res[name].holds, name


def test_identities_on_float_backend():
    res = check_identities(ex18(), ORIGIN, 5, backend=FLOAT)
    for r in res.values():
        if r.applicable:
            assert r.residual <= 1e-9, r


def test_coordinate_frame_has_no_structure_functions():
    frame = [VectorField([1 if i == j else 0 for i in range(4)]).to_jet(ORIGIN, 3) for j in range(4)]
    for comps in structure_functions(frame).values():
        assert all(c.is_zero() for c in comps)


def test_signature_antisymmetry_in_the_bracket_pair():
    sig = invariant_signature(ex18(), ORIGIN, r=1)
    for level in sig.levels:
        for (i, js, k, l), v in level.items():
            assert level[(i, js, l, k)] == -v
    assert [len(level) for level in sig.levels] == [48, 192]


def test_signature_needs_order_budget():
    with pytest.raises(OrderBudgetError):
        invariant_signature(ex18(), ORIGIN, r=2, order=6)


def test_equivalence_reflexive_and_symmetric():
    rng = random.Random(4)
    _, a, _ = type4_instance(rng, order=5)
    _, b, _ = type4_instance(rng, order=5)
    assert decide_equivalence(a, ORIGIN, a, ORIGIN, r=1).status == EQUIVALENT
    ab = decide_equivalence(a, ORIGIN, b, ORIGIN, r=1)
    ba = decide_equivalence(b, ORIGIN, a, ORIGIN, r=1)
    assert ab.status == ba.status
    if ab.status == INEQUIVALENT:
        assert ab.witness["left"] == ba.witness["right"]


def test_example18_parameters_are_distinguished():
    v = decide_equivalence(ex18(1, 1), ORIGIN, ex18(1, 2), ORIGIN, r=2)
    assert v.status == INEQUIVALENT
    assert v.witness["level"] == 0


def test_equivalence_refuses_low_types():
    v = decide_equivalence(model("Type2"), ORIGIN, ex18(), ORIGIN)
    assert v.status == INDETERMINATE


def test_float_signature_matches_exact_within_tolerance():
    v = decide_equivalence(ex18(), ORIGIN, ex18(), ORIGIN, r=1, backend=FLOAT)
    assert v.status == EQUIVALENT
    exact = invariant_signature(ex18(), ORIGIN, r=1)
    approx = invariant_signature(ex18(), ORIGIN, r=1, backend=FLOAT)
    for key, value in exact.levels[1].items():
        assert approx.levels[1][key] == pytest.approx(float(value), rel=1e-7, abs=1e-9)


def test_example18_crosscheck_records():
    log = example18_crosscheck(1, 1)
    quantities = {r["quantity"] for r in log}
    assert quantities == {"omega", "phi", "Z", "T", "U", "V", "frame_volume"}
    genericity = [r for r in log if r["component"] == "nonzero_iff_generic"]
    assert genericity and genericity[0]["pass"]
