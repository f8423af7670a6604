from fractions import Fraction

import pytest
from gmpy2 import mpq

from formgerms import linalg
from formgerms.errors import SingularError
from formgerms.jets import EXACT_EXP, FLOAT, ExpSum, TruncatedSeries


def q(*rows):
    return [[mpq(Fraction(v)) for v in r] for r in rows]


def test_det_and_inverse():
    m = q((2, 1, 0, 0), (1, 3, 0, 0), (0, 0, 1, 4), (0, 0, 0, 2))
    assert linalg.det(m) == 10
    inv = linalg.inverse(m)
    eye = linalg.matmul(m, inv)
    assert eye == q((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))


def test_inverse_of_singular_matrix_raises():
    with pytest.raises(SingularError):
        linalg.inverse(q((1, 2), (2, 4)))


@pytest.mark.parametrize(
    "rows, r",
    [
        (((1, 0), (0, 1)), 2),
        (((1, 2), (2, 4)), 1),
        (((0, 0), (0, 0)), 0),
        (((1, 2, 3, 4), (0, 1, 0, 1), (1, 3, 3, 5), (0, 0, 0, 0), (2, 4, 6, 8)), 2),
    ],
)
def test_rank(rows, r):
    assert linalg.rank(q(*rows)) == r
    assert linalg.rank([[float(v) for v in row] for row in rows], FLOAT) == r


def test_rank_with_exponential_entries():
    e = ExpSum.exp_of(1)
    assert linalg.rank([[e, mpq(1)], [e * e, e]], EXACT_EXP) == 1
    assert linalg.rank([[e, mpq(1)], [mpq(1), e]], EXACT_EXP) == 2


def test_pfaffian_squares_to_determinant():
    F = {(0, 1): 2, (0, 2): -1, (0, 3): 3, (1, 2): 5, (1, 3): 1, (2, 3): -4}
    m = [[mpq(0)] * 4 for _ in range(4)]
    for (i, j), v in F.items():
        m[i][j], m[j][i] = mpq(v), mpq(-v)
    pf = linalg.pfaffian4(m)
    assert pf == 2 * -4 + 3 * 5 - (-1) * 1
    assert pf * pf == linalg.det(m)


def test_charpoly_of_companion_like_matrix():
    # (l^2 + 1)^2 for a block rotation
    m = q((0, -1, 0, 0), (1, 0, 0, 0), (0, 0, 0, -1), (0, 0, 1, 0))
    assert linalg.charpoly(m) == [1, 0, 2, 0, 1]


def test_series_solve():
    x1 = TruncatedSeries.variable(1, 3)
    one = TruncatedSeries.constant(1, 3)
    zero = TruncatedSeries.zero(3)
    A = [[one + x1, zero], [x1, one]]
    rhs = [one, x1]
    sol = linalg.series_solve(A, rhs)
    for i in range(2):
        assert A[i][0] * sol[0] + A[i][1] * sol[1] == rhs[i]
