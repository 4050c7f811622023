"""Exact dense linear algebra on small matrices.

Entries may be :class:`fractions.Fraction`, ints, or sympy expressions. The
fraction-free (Bareiss) elimination is the primary determinant routine;
:func:`cofactor_det` is an independent expansion used to cross-check it.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import sympy

Matrix = Sequence[Sequence]


def _exact_div(a, b):
    if isinstance(a, sympy.Basic) or isinstance(b, sympy.Basic):
        q = sympy.sympify(a) / sympy.sympify(b)
        return q if q.is_Rational else sympy.cancel(q)
    if isinstance(a, int) and isinstance(b, int):
        return Fraction(a, b)
    return a / b


def _is_zero(x) -> bool:
    if isinstance(x, sympy.Basic):
        return x == 0 if x.is_Rational else sympy.simplify(x) == 0
    return x == 0


def _rows(m) -> list[list]:
    if isinstance(m, sympy.MatrixBase):
        return [list(m.row(i)) for i in range(m.rows)]
    return [list(r) for r in m]


def bareiss(m) -> tuple[object, list]:
    """Fraction-free elimination without pivoting.

    Returns ``(det, pivots)`` where ``pivots[k]`` is the k-th leading principal
    minor. Elimination stops at the first vanishing pivot; the remaining minors
    are then computed directly.
    """
    a = _rows(m)
    n = len(a)
    if n == 0:
        return 1, []
    if any(len(r) != n for r in a):
        raise ValueError("matrix must be square")
    pivots: list = []
    prev = 1
    for k in range(n):
        if _is_zero(a[k][k]):
            pivots.append(0)
            for j in range(k + 1, n):
                pivots.append(cofactor_det([r[: j + 1] for r in _rows(m)[: j + 1]]))
            return pivots[-1], pivots
        pivots.append(a[k][k])
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = _exact_div(a[i][j] * a[k][k] - a[i][k] * a[k][j], prev)
        prev = a[k][k]
    return pivots[-1], pivots


def det(m):
    return bareiss(m)[0]


def leading_minors(m) -> list:
    return bareiss(m)[1]


def cofactor_det(m):
    """Laplace expansion along the first row."""
    a = _rows(m)
    n = len(a)
    if n == 0:
        return 1
    if n == 1:
        return a[0][0]
    if n == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    total = 0
    for j in range(n):
        if _is_zero(a[0][j]):
            continue
        minor = [row[:j] + row[j + 1 :] for row in a[1:]]
        sign = -1 if j % 2 else 1
        total = total + sign * a[0][j] * cofactor_det(minor)
    return total


def rank(m) -> int:
    """Rank over the rationals by Gaussian elimination with pivoting."""
    a = [[Fraction(x) if not isinstance(x, sympy.Basic) else x for x in r] for r in _rows(m)]
    if not a:
        return 0
    nrows, ncols = len(a), len(a[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if not _is_zero(a[i][c])), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(nrows):
            if i != r and not _is_zero(a[i][c]):
                f = _exact_div(a[i][c], a[r][c])
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        r += 1
        if r == nrows:
            break
    return r


def rref(m) -> list[list[Fraction]]:
    """Reduced row echelon form over Q with zero rows dropped."""
    a = [[Fraction(x) for x in r] for r in _rows(m)]
    if not a:
        return []
    nrows, ncols = len(a), len(a[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        lead = a[r][c]
        a[r] = [x / lead for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        r += 1
        if r == nrows:
            break
    return a[:r]
