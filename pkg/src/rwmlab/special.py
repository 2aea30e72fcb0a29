"""Scalar special functions for the acceptance-rate limit theory.

``g_fn`` and ``gamma_fn`` are defined on ``[0, +inf] x R``. The point
``a = +inf`` is passed as ``math.inf`` and handled by its own branch; it is
never replaced by a large finite number.
"""
import math

import numpy as np
from scipy.special import erfc, erfcx

INF = math.inf
_SQRT2 = math.sqrt(2.0)


def normal_cdf(x):
    """Standard normal CDF, accepting scalars or arrays.

    Evaluated through the complementary error function so the lower tail
    keeps full relative precision.
    """
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def log_normal_cdf(x: float) -> float:
    """``log(normal_cdf(x))`` without underflow for very negative ``x``."""
    if x >= -5.0:
        return math.log(normal_cdf(x))
    # Phi(x) = erfcx(-x / sqrt 2) * exp(-x^2 / 2) / 2
    return -0.5 * x * x + math.log(0.5 * erfcx(-x / _SQRT2))


def _check_a(a: float) -> None:
    if math.isnan(a) or a < 0.0:
        raise ValueError(f"first argument must lie in [0, +inf], got {a!r}")


def g_fn(a: float, b: float) -> float:
    r"""The function :math:`\mathcal{G}(a, b)`.

    ``exp((a - b)/2) * Phi(b/(2 sqrt a) - sqrt a)`` on ``0 < a < inf``,
    ``0`` at ``a = inf`` and ``exp(-b/2) 1{b > 0}`` at ``a = 0``.
    """
    _check_a(a)
    if a == INF:
        return 0.0
    if a == 0.0:
        return math.exp(-b / 2.0) if b > 0 else 0.0
    sa = math.sqrt(a)
    c = b / (2.0 * sa) - sa
    if c >= 0.0:
        # here b >= 2a, so the exponent is <= -a/2
        return math.exp((a - b) / 2.0) * normal_cdf(c)
    # (a - b)/2 - c^2/2 collapses to -b^2/(8a); the product is bounded by 1
    return math.exp(-b * b / (8.0 * a)) * 0.5 * erfcx(-c / _SQRT2)


def gamma_fn(a: float, b: float) -> float:
    r"""The function :math:`\Gamma(a, b) = E[1 \wedge e^G]` for ``G ~ N(-b/2, a)``."""
    _check_a(a)
    if a == INF:
        return 0.5
    if a == 0.0:
        return math.exp(-max(b, 0.0) / 2.0)
    return normal_cdf(-b / (2.0 * math.sqrt(a))) + g_fn(a, b)


def expected_min_one_exp(mu: float, sigma2: float) -> float:
    """``E[min(1, exp(G))]`` for ``G ~ N(mu, sigma2)``.

    Closed form ``Phi(mu/s) + exp(mu + s^2/2) Phi(-s - mu/s)``; it coincides
    with ``gamma_fn(sigma2, -2 mu)``.
    """
    if sigma2 < 0.0 or math.isnan(sigma2):
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2!r}")
    if sigma2 == 0.0:
        return min(1.0, math.exp(mu))
    s = math.sqrt(sigma2)
    first = normal_cdf(mu / s)
    c = -s - mu / s
    if c >= 0.0:
        second = math.exp(mu + sigma2 / 2.0) * normal_cdf(c)
    else:
        # exponent mu + s^2/2 - c^2/2 = -mu^2 / (2 s^2)
        second = math.exp(-mu * mu / (2.0 * sigma2)) * 0.5 * erfcx(-c / _SQRT2)
    return first + second
