"""Exact power series in theta for the cancellation-prone combinations
of J(1,1), J(2,2), J(3,1) that enter the layer law at small angles.

Coefficients live in Q[1/pi]: a series is a dict mapping
(power of theta, power of 1/pi) -> Fraction.  They are rounded to float
once, after all cancellation has happened exactly.
"""

from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

ORDER = 32


def _trunc(s):
    return {k: v for k, v in s.items() if k[0] <= ORDER and v != 0}


def _add(*series):
    out = {}
    for s in series:
        for k, v in s.items():
            out[k] = out.get(k, 0) + v
    return _trunc(out)


def _scale(s, c):
    return {k: v * c for k, v in s.items()}


def _mul(x, y):
    out = {}
    for (i1, k1), v1 in x.items():
        for (i2, k2), v2 in y.items():
            if i1 + i2 <= ORDER:
                key = (i1 + i2, k1 + k2)
                out[key] = out.get(key, 0) + v1 * v2
    return _trunc(out)


def _const(c):
    return {(0, 0): Fraction(c)}


def _cos():
    return {(i, 0): Fraction((-1) ** (i // 2), factorial(i)) for i in range(0, ORDER + 1, 2)}


def _sin():
    return {(i, 0): Fraction((-1) ** (i // 2), factorial(i)) for i in range(1, ORDER + 1, 2)}


THETA = {(1, 0): Fraction(1)}
INV_PI = {(0, 1): Fraction(1)}


@lru_cache(maxsize=1)
def _building_blocks():
    c, s = _cos(), _sin()
    half_over_pi = _scale(INV_PI, Fraction(1, 2))
    # J11 = cos/2 + (sin - theta cos) / (2 pi)
    j11 = _add(_scale(c, Fraction(1, 2)), _mul(half_over_pi, _add(s, _scale(_mul(THETA, c), -1))))
    # J20 = 1/2 + (sin cos - theta) / (2 pi)
    j20 = _add(_const(Fraction(1, 2)), _mul(half_over_pi, _add(_mul(s, c), _scale(THETA, -1))))
    j31 = _add(_scale(j11, 2), _mul(c, j20))
    j22 = _add(j20, _scale(_mul(c, j11), 2))
    j11_2 = _mul(j11, j11)
    s2 = _add(_const(1), _scale(j11_2, -4))
    k = _add(_scale(_mul(j11_2, j22), 8), _scale(_mul(j11_2, j11_2), -8), _scale(j11_2, 4),
             _scale(_mul(j11, j31), -8), j22, _const(1))
    ell = _add(_scale(j11_2, 2), _scale(_mul(j11, j31), -4), j22, _const(1))
    return {"s2": s2, "K": k, "L": ell, "J22": j22, "J11": j11, "J31": j31}


def _float_coeffs(series):
    import mpmath

    mp = mpmath.MPContext()
    mp.dps = 50
    inv_pi = 1 / mp.pi
    acc = [mp.mpf(0)] * (ORDER + 1)
    for (i, k), v in series.items():
        acc[i] += mp.mpf(v.numerator) / v.denominator * inv_pi ** k
    return np.array([float(a) for a in acc])


@lru_cache(maxsize=None)
def coefficients(name: str) -> np.ndarray:
    """Float coefficients c[0..ORDER] of the named series in powers of theta."""
    return _float_coeffs(_building_blocks()[name])


def evaluate(name: str, theta):
    c = coefficients(name)
    t = np.asarray(theta, dtype=float)
    acc = np.zeros_like(t)
    for coef in c[::-1]:
        acc = acc * t + coef
    return acc


def exact_series(name: str):
    """The exact series as {(theta power, 1/pi power): Fraction}."""
    return dict(_building_blocks()[name])
