"""Random generators shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction

from formgerms import linalg
from formgerms.analysis import Germ
from formgerms.errors import FrameDegenerateError
from formgerms.exterior import ChartMap, DifferentialForm
from formgerms.expr import Const, Var
from formgerms.expr.calculus import add, mul
from formgerms.frame import build_frame
from formgerms.models import instantiate, random_polynomial, random_prop51_spec

ORIGIN = (0, 0, 0, 0)


def rational(rng: random.Random, radius=Fraction(1, 2), grid: int = 8) -> Fraction:
    return Fraction(radius) * Fraction(rng.randint(-grid, grid), grid)


def rational_point(rng: random.Random, radius=Fraction(1, 2)) -> tuple:
    return tuple(rational(rng, radius) for _ in range(4))


def random_rank4_form(rng: random.Random, degree: int = 2, point=ORIGIN) -> DifferentialForm:
    """Polynomial 2-form with nonzero Pfaffian at ``point``."""
    while True:
        coeffs = {k: random_polynomial(rng, degree) for k in ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))}
        form = DifferentialForm(2, coeffs)
        if Germ(form, point, 0).rank == 4:
            return form


def type4_instance(rng: random.Random, order: int = 5, need_frame: bool = True, degree: int = 2):
    """A generated type-4 form (and its germ at the origin) with a non-degenerate frame."""
    while True:
        spec = random_prop51_spec(rng, degree)
        form = instantiate(spec)
        g = Germ(form, ORIGIN, order)
        if g.rank < 4 or g.omega_class() < 4:
            continue
        if need_frame:
            try:
                build_frame(g)
            except FrameDegenerateError:
                continue
        return spec, form, g


def quadratic_form(rng: random.Random, coeff_range: int = 2):
    e = Const(0)
    for i in range(1, 5):
        for j in range(i, 5):
            c = rng.randint(-coeff_range, coeff_range)
            if c and rng.random() < 0.5:
                e = add(e, mul(Const(c), mul(Var(i), Var(j))))
    return e


def random_diffeomorphism(rng: random.Random, base=ORIGIN) -> ChartMap:
    """``x -> base + L x + Q(x)`` with ``L`` invertible and ``Q`` homogeneous quadratic."""
    while True:
        L = [[Fraction(rng.randint(-2, 2)) for _ in range(4)] for _ in range(4)]
        if linalg.det(L) != 0:
            break
    comps = []
    for i in range(4):
        e = Const(Fraction(base[i]))
        for j in range(4):
            if L[i][j]:
                e = add(e, mul(Const(L[i][j]), Var(j + 1)))
        comps.append(add(e, quadratic_form(rng)))
    return ChartMap(comps)
