"""Regularised incomplete gamma functions for test p-values.

Series expansion below ``x < a + 1``, modified Lentz continued fraction above,
both scaled by ``x**a e**-x / Gamma(a)``.
"""

from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_tail(a: float) -> float:
    """lgamma(a) - ((a - 1/2) ln a - a + ln(2 pi)/2), asymptotic for a >= 10."""
    r = 1.0 / (a * a)
    return (1.0 / 12 - r * (1.0 / 360 - r * (1.0 / 1260 - r * (1.0 / 1680 - r / 1188)))) / a


def _prefactor(a: float, x: float) -> float:
    """x**a e**-x / Gamma(a), rearranged for large a to avoid cancellation."""
    if a < 10.0:
        return math.exp(a * math.log(x) - x - math.lgamma(a))
    t = (x - a) / a
    log_core = a * ((math.log1p(t) if abs(t) < 0.5 else math.log(x / a)) - t)
    return math.exp(log_core + 0.5 * math.log(a) - _HALF_LOG_2PI - _stirling_tail(a))


def _series(a: float, x: float) -> float:
    """Lower regularised P(a, x) by its power series."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * _prefactor(a, x)


def _continued_fraction(a: float, x: float) -> float:
    """Upper regularised Q(a, x) by Lentz's method."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * _prefactor(a, x)


def igam(a: float, x: float) -> float:
    if a <= 0:
        raise ValueError("igam needs a > 0")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return _series(a, x)
    return 1.0 - _continued_fraction(a, x)


def igamc(a: float, x: float) -> float:
    """Upper regularised incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise ValueError("igamc needs a > 0")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _series(a, x)
    return _continued_fraction(a, x)


def erfc(x: float) -> float:
    return math.erfc(x)
