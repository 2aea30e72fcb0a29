"""Large-d limits: acceptance rate ``a(ell)``, diffusion speed ``h(ell)``
and the scale maximising the speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .special import normal_cdf

# a(20) < 1e-22, so h is negligible past 20 / sqrt(I)
SEARCH_UPPER = 20.0
COARSE_POINTS = 1024
GOLDEN_TOL = 1e-10

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _check(I: float, ell) -> None:
    if not I > 0:
        raise ValueError(f"Fisher information must be positive, got {I!r}")
    if np.any(np.asarray(ell) < 0):
        raise ValueError("ell must be nonnegative")


def acceptance_limit(I: float, ell):
    """``a(ell) = 2 Phi(-ell sqrt(I) / 2)``."""
    _check(I, ell)
    return 2.0 * normal_cdf(-np.asarray(ell, dtype=float) * math.sqrt(I) / 2.0)


def speed(I: float, ell):
    """``h(ell) = ell^2 a(ell)``."""
    ell_arr = np.asarray(ell, dtype=float)
    out = ell_arr ** 2 * acceptance_limit(I, ell)
    return float(out) if np.ndim(ell) == 0 else out


def golden_section_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL, max_iter: int = 500):
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
    x = 0.5 * (lo + hi)
    return x, f(x)


def _speed_slope_sign(I: float, ell: float) -> float:
    """``h'(ell) / (2 ell)``: ``2 Phi(-c ell) - c ell phi(c ell)`` with ``c = sqrt(I) / 2``."""
    u = 0.5 * math.sqrt(I) * ell
    return 2.0 * normal_cdf(-u) - u * math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def optimal_scaling(I: float) -> tuple[float, float, float]:
    """``(ell_star, h_star, a(ell_star))`` maximising ``h`` on ``(0, 20/sqrt(I)]``.

    A 1024-point grid brackets the maximum and golden-section search
    narrows it. ``h`` is flat at its peak, so comparing values cannot place
    the maximiser closer than about ``sqrt(eps) ell``; the last digits come
    from the sign change of ``h'`` inside the golden-section bracket.
    """
    _check(I, 0.0)
    upper = SEARCH_UPPER / math.sqrt(I)
    grid = np.linspace(upper / COARSE_POINTS, upper, COARSE_POINTS)
    h = speed(I, grid)
    k = int(np.argmax(h))
    lo = grid[max(k - 1, 0)] if k > 0 else 0.0
    hi = grid[min(k + 1, len(grid) - 1)]
    ell_star, _ = golden_section_max(lambda e: speed(I, e), lo, hi)
    a, b = ell_star - 1e-4 * upper, ell_star + 1e-4 * upper
    if _speed_slope_sign(I, a) > 0 > _speed_slope_sign(I, b):
        ell_star = brentq(lambda e: _speed_slope_sign(I, e), a, b, xtol=1e-15, rtol=1e-15)
    return float(ell_star), float(speed(I, ell_star)), float(acceptance_limit(I, ell_star))


@dataclass
class LimitReport:
    fisher_info: float
    ell_star: float
    h_star: float
    acc_at_star: float
    curve: list[tuple[float, float, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "fisher_info": self.fisher_info,
            "ell_star": self.ell_star,
            "h_star": self.h_star,
            "acc_at_star": self.acc_at_star,
        }


def limit_report(I: float, ell_grid=None) -> LimitReport:
    """Star point plus the ``(ell, a, h)`` curve on ``ell_grid``.

    The default grid has 200 points on ``(0, 3 ell_star]``.
    """
    ell_star, h_star, acc = optimal_scaling(I)
    if ell_grid is None:
        ell_grid = np.linspace(3 * ell_star / 200, 3 * ell_star, 200)
    ells = np.asarray(ell_grid, dtype=float)
    a = acceptance_limit(I, ells)
    h = ells ** 2 * a
    curve = [(float(e), float(ai), float(hi)) for e, ai, hi in zip(ells, a, h)]
    return LimitReport(I, ell_star, h_star, acc, curve)
