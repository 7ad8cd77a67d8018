"""Chi-square and normal tail probabilities backing the calibration tests."""

from __future__ import annotations

import math

__all__ = ["chi2_sf", "normal_cdf", "regularized_gamma_q"]

_MAX_ITER = 1000
_EPS = 1e-16


def _lower_series(a: float, x: float) -> float:
    # Regularized lower incomplete gamma P(a, x) by its power series;
    # reliable for x < a + 1.
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_continued_fraction(a: float, x: float) -> float:
    # Regularized upper incomplete gamma Q(a, x) by Lentz's modified
    # continued fraction; reliable for x >= a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a)."""
    if a <= 0:
        raise ValueError(f"shape parameter must be positive, got {a}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_continued_fraction(a, x)


def chi2_sf(x: float, dof: int) -> float:
    """Upper-tail probability P(X >= x) for a chi-square with `dof` degrees
    of freedom, used to turn calibration statistics into p-values."""
    if dof < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {dof}")
    if x < 0:
        raise ValueError(f"chi-square statistic must be non-negative, got {x}")
    return min(1.0, max(0.0, regularized_gamma_q(dof / 2.0, x / 2.0)))


def normal_cdf(z: float) -> float:
    """Standard normal CDF Phi(z), via erf."""
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
