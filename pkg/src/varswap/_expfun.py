"""Exponential ratio functions with removable singularities.

All closed forms in :mod:`varswap.strikes` are written in terms of

    exprel(x)  = (e^x - 1) / x
    exprel2(x) = (e^x - 1 - x) / x^2
    exprel_dd(x, y) = (exprel(x) - exprel(y)) / (x - y)

so that every ratio of the kind (e^{ax} - 1)/x stays finite as its
denominator vanishes.  Below ``SWITCH`` the functions use a six-term Taylor
expansion.  Between ``SWITCH`` and 1 the second-order quantities are summed
from their convergent series (or a fixed Gauss-Legendre rule) instead of the
direct quotient, which would lose ~eps/|x| relative accuracy.
"""

from __future__ import annotations

import math

import numpy as np

SWITCH = 1e-5

_EXPREL_TAYLOR = tuple(1.0 / math.factorial(k + 1) for k in range(6))
_EXPREL2_TAYLOR = tuple(1.0 / math.factorial(k + 2) for k in range(6))

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(40)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def _horner(coeffs, x):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def exprel(x: float) -> float:
    """(e^x - 1)/x, equal to 1 at x = 0."""
    x = float(x)
    if abs(x) < SWITCH:
        return _horner(_EXPREL_TAYLOR, x)
    return math.expm1(x) / x


def exprel2(x: float) -> float:
    """(e^x - 1 - x)/x^2, equal to 1/2 at x = 0."""
    x = float(x)
    if abs(x) < SWITCH:
        return _horner(_EXPREL2_TAYLOR, x)
    if abs(x) < 1.0:
        term = total = 0.5
        k = 2
        while abs(term) > 1e-18 * abs(total):
            k += 1
            term *= x / k
            total += term
        return total
    return (math.expm1(x) - x) / (x * x)


def exprel_moment(j: int, c: float) -> float:
    """The j-th derivative of exprel at c, i.e. int_0^1 u^j e^{c u} du."""
    c = float(c)
    if abs(c) <= 40.0:
        return float(np.dot(_GL_WEIGHTS, _GL_NODES**j * np.exp(c * _GL_NODES)))
    # upward recurrence is stable once |c| > j
    val = math.expm1(c) / c
    ec = math.exp(c)
    for k in range(1, j + 1):
        val = (ec - k * val) / c
    return val


def exprel_dd(x: float, y: float) -> float:
    """Divided difference (exprel(x) - exprel(y))/(x - y), finite as x -> y."""
    x, y = float(x), float(y)
    d = x - y
    if abs(d) >= 1.0 or (abs(d) >= SWITCH and max(abs(x), abs(y)) > 40.0):
        return (exprel(x) - exprel(y)) / d
    if abs(d) >= SWITCH:
        # int_0^1 u e^{y u} exprel(d u) du
        g = np.array([exprel(d * u) for u in _GL_NODES])
        return float(np.dot(_GL_WEIGHTS, _GL_NODES * np.exp(y * _GL_NODES) * g))
    # symmetric expansion about the midpoint; odd orders cancel
    c = 0.5 * (x + y)
    d2 = d * d
    return (
        exprel_moment(1, c)
        + exprel_moment(3, c) * d2 / 24.0
        + exprel_moment(5, c) * d2 * d2 / 1920.0
    )


def exprel_d1(x: float) -> float:
    """Derivative of exprel: int_0^1 u e^{x u} du = exprel(x) - exprel2(x)."""
    return exprel(x) - exprel2(x)
