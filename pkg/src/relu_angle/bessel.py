"""Bessel-number families P(a, b) and Q(a, b) in exact integer arithmetic.

P(a, b) are the Bessel numbers of the second kind (OEIS A001498 read by
rows); Q(a, b) is the companion family that appears in the expansion of
J(a, b) over the odd source row.  Both vanish unless a >= b with a - b even.
"""

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

from .errors import ConsistencyError


def _check(a, b):
    if a < 0 or b < 0:
        raise ValueError("indices must be non-negative")


def _active(a, b):
    return a >= b and (a - b) % 2 == 0


def bessel_P(a: int, b: int) -> int:
    _check(a, b)
    if not _active(a, b):
        return 0
    h = (a - b) // 2
    num = factorial(a)
    den = factorial(b) * factorial(h) * 2 ** h
    q, r = divmod(num, den)
    if r:
        raise ConsistencyError(f"P({a},{b}) is not an integer")
    return q


def bessel_Q(a: int, b: int) -> int:
    _check(a, b)
    if not _active(a, b):
        return 0
    h = (a - b) // 2
    s = sum(comb(a + 1, i) for i in range(h + 1))
    val = Fraction(factorial((a + b) // 2), factorial(b)) * Fraction(2) ** (-h) * s
    if val.denominator != 1:
        raise ConsistencyError(f"Q({a},{b}) = {val} is not an integer")
    return val.numerator


@lru_cache(maxsize=None)
def bessel_P_rec(a: int, b: int) -> int:
    """P(a, b) from P(a, b) = (a-1) P(a-2, b) + P(a-1, b-1)."""
    if b < 0 or a < 0 or b > a:
        return 0
    if a == b:
        return 1
    return (a - 1) * bessel_P_rec(a - 2, b) + bessel_P_rec(a - 1, b - 1)


@lru_cache(maxsize=None)
def bessel_Q_rec(a: int, b: int) -> int:
    """Q(a, b) from Q(a, b) = a Q(a-2, b) + Q(a-1, b-1)."""
    if b < 0 or a < 0 or b > a:
        return 0
    if a == b:
        return 1
    return a * bessel_Q_rec(a - 2, b) + bessel_Q_rec(a - 1, b - 1)
