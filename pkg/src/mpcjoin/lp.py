"""Exact two-phase simplex over rationals.

Solves ``maximize c.x  subject to  A x <= b, x >= 0`` with ``fractions.Fraction``
arithmetic and Bland's rule, so results are exact and reproducible.  Problems
here are tiny (a few dozen variables), which is why a dense tableau is fine.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class LpError(Exception):
    pass


class Infeasible(LpError):
    pass


class Unbounded(LpError):
    pass


@dataclass(frozen=True)
class LpSolution:
    value: Fraction
    x: tuple[Fraction, ...]


def _pivot(rows, rhs, obj, basis, r, col):
    piv = rows[r][col]
    row = [v / piv for v in rows[r]]
    rows[r] = row
    rhs[r] = rhs[r] / piv
    for i in range(len(rows)):
        if i == r:
            continue
        f = rows[i][col]
        if f:
            rows[i] = [a - f * b for a, b in zip(rows[i], row)]
            rhs[i] -= f * rhs[r]
    f = obj[0][col]
    if f:
        obj[0] = [a - f * b for a, b in zip(obj[0], row)]
        obj[1] -= f * rhs[r]
    basis[r] = col


def _run(rows, rhs, obj, basis, allowed):
    # obj[0][j] holds the reduced cost of column j; obj[1] is -(current value).
    while True:
        col = next((j for j in allowed if obj[0][j] > 0), None)
        if col is None:
            return
        best = None
        for i, row in enumerate(rows):
            a = row[col]
            if a > 0:
                key = (rhs[i] / a, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise Unbounded("objective unbounded")
        _pivot(rows, rhs, obj, basis, best[1], col)


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LpSolution:
    """Maximize ``c.x`` over ``A x <= b, x >= 0``; raises Infeasible/Unbounded."""
    n = len(c)
    m = len(A)
    c = [Fraction(v) for v in c]
    # columns: n structural, m slacks, then one artificial per negative row
    neg = [i for i in range(m) if Fraction(b[i]) < 0]
    width = n + m + len(neg)
    rows, rhs, basis = [], [], []
    art_of = {}
    for i in range(m):
        row = [Fraction(v) for v in A[i]] + [Fraction(0)] * (m + len(neg))
        row[n + i] = Fraction(1)
        bi = Fraction(b[i])
        if bi < 0:
            row = [-v for v in row]
            bi = -bi
            k = n + m + len(art_of)
            art_of[i] = k
            row[k] = Fraction(1)
            basis.append(k)
        else:
            basis.append(n + i)
        rows.append(row)
        rhs.append(bi)

    if neg:
        # phase 1: maximize -(sum of artificials)
        cost = [Fraction(0)] * width
        for k in art_of.values():
            cost[k] = Fraction(-1)
        obj = [list(cost), Fraction(0)]
        for i, k in enumerate(basis):
            if cost[k]:
                obj[0] = [a - cost[k] * v for a, v in zip(obj[0], rows[i])]
                obj[1] -= cost[k] * rhs[i]
        _run(rows, rhs, obj, basis, range(width))
        if obj[1] != 0:
            raise Infeasible("no feasible point")
        arts = set(art_of.values())
        for i in range(len(rows) - 1, -1, -1):
            if basis[i] in arts:
                col = next((j for j in range(n + m) if rows[i][j] != 0), None)
                if col is None:
                    del rows[i], rhs[i], basis[i]  # redundant constraint
                else:
                    _pivot(rows, rhs, obj, basis, i, col)
        rows = [r[: n + m] for r in rows]
        width = n + m

    cost = c + [Fraction(0)] * (width - n)
    obj = [list(cost), Fraction(0)]
    for i, k in enumerate(basis):
        if cost[k]:
            obj[0] = [a - cost[k] * v for a, v in zip(obj[0], rows[i])]
            obj[1] -= cost[k] * rhs[i]
    _run(rows, rhs, obj, basis, range(width))
    x = [Fraction(0)] * n
    for i, k in enumerate(basis):
        if k < n:
            x[k] = rhs[i]
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return LpSolution(value=value, x=tuple(x))
