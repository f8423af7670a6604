"""Small dense linear algebra over the two scalar backends.

Matrices here are at most 5x4, so everything is plain Gaussian elimination on
lists; the float backend uses numpy for rank (singular values) and inversion.
"""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import SingularError
from .jets import EXACT, FLOAT, ExpSum, TruncatedSeries, _block_mul, _zeros, block_bounds, n_coeffs, to_scalar

RANK_RTOL = 1e-9


def _as_float(matrix) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in matrix], dtype=np.float64)


def rank(matrix: Sequence[Sequence], backend: str = EXACT) -> int:
    """Rank; exact elimination on ``exact``, singular-value threshold on ``float``.

    The float threshold is ``1e-9 * ||matrix||_2``.  Matrices holding
    exponential sums are ranked by their largest nonvanishing minor, which
    needs no division.
    """
    rows = [list(r) for r in matrix]
    if not rows or not rows[0]:
        return 0
    if backend == FLOAT:
        a = _as_float(rows)
        s = np.linalg.svd(a, compute_uv=False)
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > RANK_RTOL * s[0]))
    rows = [[to_scalar(v, backend) for v in r] for r in rows]
    if any(isinstance(v, ExpSum) for r in rows for v in r):
        return _rank_by_minors(rows)
    n_rows, n_cols = len(rows), len(rows[0])
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(r + 1, n_rows):
            if rows[i][c] != 0:
                f = rows[i][c] / rows[r][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
        if r == n_rows:
            break
    return r


def _rank_by_minors(rows) -> int:
    n_rows, n_cols = len(rows), len(rows[0])
    for k in range(min(n_rows, n_cols), 0, -1):
        for ri in combinations(range(n_rows), k):
            for ci in combinations(range(n_cols), k):
                if det([[rows[i][j] for j in ci] for i in ri]) != 0:
                    return k
    return 0


def _pivot(column_values) -> int | None:
    """Index of the first rational nonzero entry, else the first unit, else any nonzero."""
    unit = other = None
    for i, v in column_values:
        if v == 0:
            continue
        if not isinstance(v, ExpSum):
            return i
        if v.is_unit():
            unit = i if unit is None else unit
        elif other is None:
            other = i
    return unit if unit is not None else other


def inverse(matrix: Sequence[Sequence], backend: str = EXACT) -> list[list]:
    n = len(matrix)
    if backend == FLOAT:
        a = _as_float(matrix)
        if rank(a, FLOAT) < n:
            raise SingularError("matrix is singular at the point")
        return np.linalg.inv(a).tolist()
    one, zero = to_scalar(1, EXACT), to_scalar(0, EXACT)
    aug = [
        [to_scalar(v, backend) for v in row] + [one if i == j else zero for j in range(n)]
        for i, row in enumerate(matrix)
    ]
    for c in range(n):
        pivot = _pivot((i, aug[i][c]) for i in range(c, n))
        if pivot is None:
            raise SingularError("matrix is singular at the point")
        aug[c], aug[pivot] = aug[pivot], aug[c]
        p = aug[c][c]
        aug[c] = [x / p for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [row[n:] for row in aug]


def matmul(a, b):
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), start=0 * a[0][0]) for j in range(len(b[0]))] for i in range(len(a))]


def det(matrix) -> object:
    """Determinant by cofactor expansion (n <= 4 in practice, works on series too)."""
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total = None
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = matrix[0][j] * det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


def pfaffian4(m) -> object:
    """Pfaffian of a 4x4 skew matrix: m12 m34 - m13 m24 + m14 m23."""
    return m[0][1] * m[2][3] - m[0][2] * m[1][3] + m[0][3] * m[1][2]


def charpoly(matrix, backend: str = EXACT) -> list:
    """Coefficients ``[1, c1, ..., cn]`` of ``det(lambda*id - A)`` (Faddeev-LeVerrier)."""
    n = len(matrix)
    a = [[to_scalar(v, backend) for v in row] for row in matrix]
    one = to_scalar(1, backend)
    zero = to_scalar(0, backend)
    coeffs = [one]
    m = [[zero] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{k-1} I
        am = matmul(a, m) if k > 1 else [[zero] * n for _ in range(n)]
        m = [[am[i][j] + (coeffs[-1] if i == j else zero) for j in range(n)] for i in range(n)]
        am = matmul(a, m)
        trace = sum((am[i][i] for i in range(n)), start=zero)
        coeffs.append(-trace / k)
    return coeffs


def series_solve(matrix: Sequence[Sequence[TruncatedSeries]], rhs: Sequence[TruncatedSeries]):
    """Solve ``matrix @ x = rhs`` for jets, one homogeneous degree at a time.

    The constant-term matrix must be invertible.  Writing ``M = M0 + N`` with
    ``N`` vanishing at the point, the degree-``d`` part of the solution is
    ``M0^{-1} (b_d - sum_{j>=1} (N_j x_{d-j})_d)``, a 4x4 linear solve per jet
    coefficient.
    """
    n = len(rhs)
    entries = [s for row in matrix for s in row] + list(rhs)
    backend = entries[0].backend
    order = min(s.order for s in entries)
    m0 = [[matrix[i][j].value for j in range(n)] for i in range(n)]
    minv = inverse(m0, backend)
    if backend == FLOAT:
        minv = [[float(v) for v in row] for row in minv]

    def nonzero(block):
        return any(v != 0 for v in block)

    mblocks = [
        [[None] + [matrix[i][j].block(d) for d in range(1, order + 1)] for j in range(n)]
        for i in range(n)
    ]
    mflags = [
        [[False] + [nonzero(mblocks[i][j][d]) for d in range(1, order + 1)] for j in range(n)]
        for i in range(n)
    ]
    sol_blocks: list[list] = [[None] * (order + 1) for _ in range(n)]
    for d in range(order + 1):
        lo, hi = block_bounds(d)
        residual = []
        for i in range(n):
            acc = rhs[i].block(d).copy()
            for j in range(n):
                for k in range(1, d + 1):
                    if mflags[i][j][k]:
                        acc = acc - _block_mul(mblocks[i][j][k], sol_blocks[j][d - k], k, d - k)
            residual.append(acc)
        for j in range(n):
            acc = _zeros(hi - lo, backend)
            for i in range(n):
                if minv[j][i] != 0:
                    acc = acc + residual[i] * minv[j][i]
            sol_blocks[j][d] = acc
    out = []
    for j in range(n):
        arr = _zeros(n_coeffs(order), backend)
        for d in range(order + 1):
            lo, hi = block_bounds(d)
            arr[lo:hi] = sol_blocks[j][d]
        out.append(TruncatedSeries._wrap(arr, order, backend))
    return out
