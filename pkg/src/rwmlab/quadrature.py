"""Adaptive quadrature over (possibly unbounded) intervals with breakpoints.

Thin layer over QUADPACK (``scipy.integrate.quad``, 21-point Gauss-Kronrod on
finite pieces). The integration range is cut at user breakpoints so kinks and
indicator jumps never sit inside a panel, and unbounded pieces can optionally
be mapped to finite ones before integration.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate

TAIL_TRANSFORMS = ("none", "exp-map", "logit-map")


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error!r})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureCfg:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 200
    tail_transform: str = "none"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 16:
            raise ValueError("max_subdivisions must be at least 16")
        if self.tail_transform not in TAIL_TRANSFORMS:
            raise ValueError(f"tail_transform must be one of {TAIL_TRANSFORMS}")


DEFAULT_QUAD = QuadratureCfg()


def _pieces(lo: float, hi: float, breakpoints: Iterable[float]) -> list[tuple[float, float]]:
    cuts = sorted({float(b) for b in breakpoints if lo < b < hi and math.isfinite(b)})
    edges = [lo, *cuts, hi]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _mapped(f: Callable[[float], float], a: float, b: float, transform: str):
    """Return ``(g, u0, u1)`` with ``int_a^b f = int_u0^u1 g``."""
    if transform == "exp-map" and math.isfinite(a) != math.isfinite(b):
        anchor, sign = (a, 1.0) if math.isfinite(a) else (b, -1.0)

        def g(u):
            if u > 700.0:
                return 0.0
            e = math.exp(u)
            return f(anchor + sign * e) * e

        return g, -math.inf, math.inf
    if transform == "logit-map" and math.isfinite(a) and math.isfinite(b):
        w = b - a

        def g(u):
            if abs(u) > 700.0:
                return 0.0
            s = 1.0 / (1.0 + math.exp(-u)) if u >= 0 else math.exp(u) / (1.0 + math.exp(u))
            return f(a + w * s) * w * s * (1.0 - s)

        return g, -math.inf, math.inf
    return f, a, b


def integrate_1d(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    breakpoints: Iterable[float] = (),
    cfg: QuadratureCfg = DEFAULT_QUAD,
) -> tuple[float, float]:
    """Integrate ``f`` over ``(lo, hi)`` split at ``breakpoints``.

    Returns ``(value, error_bound)``; raises :class:`QuadratureError` carrying
    the best estimate when a piece fails to converge.
    """
    total = 0.0
    err = 0.0
    failed = []
    for a, b in _pieces(lo, hi, breakpoints):
        g, u0, u1 = _mapped(f, a, b, cfg.tail_transform)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, e = integrate.quad(
                g, u0, u1, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=cfg.max_subdivisions
            )
        total += val
        err += e
        if any(issubclass(w.category, integrate.IntegrationWarning) for w in caught):
            failed.append((a, b))
        elif not np.isfinite(val):
            failed.append((a, b))
    if failed:
        raise QuadratureError(f"quadrature did not converge on {failed}", total, err)
    return total, err
