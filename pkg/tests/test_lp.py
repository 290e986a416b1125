from fractions import Fraction

import pytest

from mpcjoin.lp import Infeasible, Unbounded, maximize


def test_textbook_problem():
    # max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  -> 36 at (2, 6)
    sol = maximize([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert sol.value == 36 and sol.x == (2, 6)


def test_fractional_optimum_is_exact():
    sol = maximize([1, 1], [[2, 1], [1, 2]], [1, 1])
    assert sol.value == Fraction(2, 3)
    assert all(isinstance(v, Fraction) for v in sol.x)


def test_negative_rhs_needs_phase_one():
    # x >= 1 written as -x <= -1; max -x  -> -1
    sol = maximize([-1], [[-1]], [-1])
    assert sol.value == -1


def test_infeasible():
    with pytest.raises(Infeasible):
        maximize([1], [[1], [-1]], [1, -2])


def test_unbounded():
    with pytest.raises(Unbounded):
        maximize([1, 0], [[0, 1]], [3])


def test_degenerate_does_not_cycle():
    # Beale's classic cycling example, terminates under Bland's rule
    c = [Fraction(3, 4), -150, Fraction(1, 50), -6]
    A = [[Fraction(1, 4), -60, Fraction(-1, 25), 9],
         [Fraction(1, 2), -90, Fraction(-1, 50), 3],
         [0, 0, 1, 0]]
    sol = maximize(c, A, [0, 0, 1])
    assert sol.value == Fraction(1, 20)
