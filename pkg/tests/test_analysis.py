from __future__ import annotations

import random
from fractions import Fraction

import pytest

from formgerms.analysis import (
    DEGENERATE,
    Germ,
    ProbeSettings,
    classify_type3_given_F,
    compute_A,
    compute_I,
    compute_omega,
    compute_phi,
    determine_type,
    probe_points,
)
from formgerms.errors import DegenerateFormError, OrderBudgetError
from formgerms.exterior import DifferentialForm
from formgerms.expr import parse_expression as P
from formgerms.jets import EXACT, EXACT_EXP, FLOAT
from formgerms.models import ModelSpec, instantiate

ORIGIN = (0, 0, 0, 0)
TYPE1 = instantiate(ModelSpec("Type1"))
TYPE2 = instantiate(ModelSpec("Type2"))
DARBOUX = instantiate(ModelSpec("Darboux0"))
EX51 = instantiate(ModelSpec("Example51", {"a": "x1*x3+x2*x4", "b": "0"}))


def one_form(**coeffs):
    return DifferentialForm(1, {(int(k[1]),): P(v) for k, v in coeffs.items()})


def test_closed_form_has_zero_omega():
    assert compute_omega(DARBOUX, ORIGIN, 3).is_zero()


@pytest.mark.parametrize("point", [ORIGIN, (Fraction(1, 3), 0, Fraction(-1, 2), 2)])
def test_type1_omega_is_dx3_everywhere(point):
    w = compute_omega(TYPE1, point, 3)
    assert w == one_form(x3="1").to_jet(point, 2, w.backend)


def test_exact_backend_promotes_to_exponentials_off_origin():
    assert Germ(TYPE1, (0, 0, 1, 0), 2).backend == EXACT_EXP
    assert Germ(TYPE1, ORIGIN, 2).backend == EXACT


def test_rank_and_budget_errors():
    with pytest.raises(DegenerateFormError):
        compute_omega(DifferentialForm.two_form(F12=1), ORIGIN, 2)
    with pytest.raises(OrderBudgetError):
        compute_phi(TYPE2, ORIGIN, 1)


@pytest.mark.parametrize("form", [TYPE1, TYPE2])
def test_phi_vanishes_for_types_one_and_two(form):
    assert compute_phi(form, ORIGIN, 3).is_zero()


def test_invariant_I_examples():
    assert compute_I(EX51, ORIGIN, 2) == -1
    assert compute_I(TYPE1, ORIGIN, 2) == 0


def test_char_poly_on_float_backend():
    rng = random.Random(0)
    for _ in range(5):
        point = tuple(Fraction(rng.randint(-8, 8), 16) for _ in range(4))
        rec = compute_A(EX51, point, 2, backend=FLOAT)
        assert rec.char_poly_residual <= 1e-9
        exact = compute_A(EX51, point, 2)
        assert float(rec.I) == pytest.approx(float(exact.I), rel=1e-9, abs=1e-12)


def test_determine_type_basic_models():
    assert determine_type(DARBOUX).type == 0
    v = determine_type(TYPE2, ORIGIN, probe=ProbeSettings(count=4))
    assert (v.type, v.constancy_certified, len(v.sample_report)) == (2, True, 4)


def test_determine_type_degenerate_cases():
    v = determine_type(DifferentialForm.two_form(F12=1))
    assert v.type == DEGENERATE and v.rank == 2
    # omega vanishes at the origin while d Omega does not
    v = determine_type(EX51)
    assert v.type == DEGENERATE and Germ(EX51, ORIGIN, 2).omega_class() == 4


def test_determine_type_float_backend():
    v = determine_type(TYPE2, ORIGIN, probe=ProbeSettings(count=3), backend=FLOAT)
    assert v.type == 2 and v.backend == FLOAT


def test_probe_points_are_reproducible_and_inside_radius():
    s = ProbeSettings(radius=Fraction(1, 8), count=5, seed=3)
    pts = probe_points(ORIGIN, s)
    assert pts == probe_points(ORIGIN, s)
    assert all(abs(c) <= Fraction(1, 8) for p in pts for c in p)


@pytest.mark.parametrize(
    "F, label",
    [
        ("1", "3.0"),
        ("1+x4", "3.1-compatible"),
        ("1+x2", "3.2-compatible"),
        ("1+x2^2+x4^2", "3.4"),
        ("1+x2*x4", "3.4"),
        ("1+x2^3+x4^3", "Indeterminate"),
    ],
)
def test_classify_type3_given_F(F, label):
    assert classify_type3_given_F(P(F)) == label


def test_classify_type3_given_F_rejects_bad_normalisation():
    with pytest.raises(ValueError):
        classify_type3_given_F(P("2+x4"))
