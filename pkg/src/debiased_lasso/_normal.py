"""Standard normal CDF and quantile.

The CDF goes through the complementary error function so that both tails
keep full relative precision; the quantile inverts it by safeguarded
Newton iterations.
"""

import math

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def normal_cdf(x):
    """Standard normal CDF, Phi(x) = P(N(0, 1) <= x).

    Accepts scalars or arrays.
    """
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / _SQRT2)


def normal_sf(x):
    """Upper tail 1 - Phi(x), accurate for large positive x."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / _SQRT2)
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def normal_pdf(x):
    return math.exp(-0.5 * x * x) / _SQRT2PI


def _lower_tail_quantile(q):
    # Solve Phi(x) = q for q <= 0.5 (so x <= 0). Newton on log Phi is
    # well behaved deep in the tail; a bracket keeps every step honest.
    lo, hi = -40.0, 0.0
    x = -math.sqrt(-2.0 * math.log(q)) if q < 0.3 else (q - 0.5) * _SQRT2PI
    x = min(max(x, lo), hi)
    for _ in range(200):
        f = normal_cdf(x)
        if f > q:
            hi = x
        else:
            lo = x
        if f == q:
            return x
        pdf = normal_pdf(x)
        # log-space Newton: d/dx log Phi(x) = pdf / Phi
        if f > 0.0 and pdf > 0.0:
            step = (math.log(f) - math.log(q)) * f / pdf
            x_new = x - step
        else:
            x_new = 0.5 * (lo + hi)
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


def normal_quantile(q):
    """Inverse of :func:`normal_cdf` on the open interval (0, 1).

    Raises
    ------
    ValueError
        If ``q`` is not strictly between 0 and 1.
    """
    q = float(q)
    if not 0.0 < q < 1.0 or math.isnan(q):
        raise ValueError(f"quantile level must lie in (0, 1), got {q!r}")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return _lower_tail_quantile(q)
    # upper half by symmetry; 1 - q is exact for q >= 0.5 in binary floating point
    return -_lower_tail_quantile(1.0 - q)
