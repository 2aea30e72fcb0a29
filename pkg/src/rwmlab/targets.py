"""One-dimensional target families ``pi(x) ∝ exp(-V(x))`` on an open interval.

Each family knows its potential ``V``, the (mean-)derivative ``V'``, its
support, an exact sampler and its log normalising constant. Outside the
support ``V = +inf`` so that ``exp(-V) = 0`` and proposals that leave the
support are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, ClassVar

import numpy as np
from scipy import special as sp

from .quadrature import DEFAULT_QUAD, QuadratureCfg, integrate_1d

NORMALIZATION_TOL = 1e-8


class TargetError(ValueError):
    """Invalid family parameters."""


@dataclass(frozen=True)
class SupportInterval:
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo < self.hi:
            raise TargetError(f"empty support ({self.lo}, {self.hi})")

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = (x > self.lo) & (x < self.hi)
        return bool(out) if out.ndim == 0 else out

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) or math.isfinite(self.hi)


def _ret(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


class Target:
    """Base class; concrete families are frozen dataclasses below."""

    family: ClassVar[str]
    support: SupportInterval
    r_split: float | None

    def __post_init__(self):
        self._validate()
        object.__setattr__(self, "log_norm", self._log_norm())
        mass = self.expect(lambda x: 1.0)
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise TargetError(
                f"{self.label}: normalising constant check failed, total mass {mass!r}"
            )

    # family hooks -------------------------------------------------------
    def _validate(self) -> None:
        pass

    def _log_norm(self) -> float:
        raise NotImplementedError

    def _potential_in(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _grad_in(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _increment_in(self, x: np.ndarray, theta) -> np.ndarray:
        return self._potential_in(x + theta) - self._potential_in(x)

    def _remainder_in(self, x, theta):
        """``V(x+theta) - V(x) - theta V'(x)`` with both points inside."""
        return self._increment_in(x, theta) - theta * self._grad_in(x)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` i.i.d. exact draws from ``pi``."""
        raise NotImplementedError

    def kinks(self) -> tuple[float, ...]:
        """Points where ``V'`` is discontinuous."""
        return ()

    def scale_points(self) -> tuple[float, ...]:
        """A few points spanning the bulk of ``pi``, used to split quadrature."""
        return ()

    def params(self) -> dict:
        raise NotImplementedError

    # public API ---------------------------------------------------------
    @property
    def label(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.family}({inner})"

    def potential(self, x):
        """``V(x)``; ``+inf`` outside the support."""
        xa = np.asarray(x, dtype=float)
        inside = self.support.contains(xa)
        out = np.full(xa.shape, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            if xa.ndim == 0:
                if inside:
                    out = self._potential_in(xa)
            else:
                out[inside] = self._potential_in(xa[inside])
        return _ret(out, x)

    def potential_array(self, x: np.ndarray) -> np.ndarray:
        """Vectorised ``V`` for chain updates (no scalar handling)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            v = self._potential_in(x)
        if self.support.bounded:
            v[~((x > self.support.lo) & (x < self.support.hi))] = np.inf
        return v

    def grad_potential(self, x):
        """``V'(x)`` for ``x`` strictly inside the support."""
        xa = np.asarray(x, dtype=float)
        if not np.all(self.support.contains(xa)):
            raise ValueError(f"{self.label}: V' requested outside the support {self.support}")
        return _ret(self._grad_in(xa), x)

    def increment(self, x, theta):
        """``V(x + theta) - V(x)`` in a cancellation-free form.

        ``x`` must lie in the support; the result is ``+inf`` when
        ``x + theta`` leaves it.
        """
        xa = np.asarray(x, dtype=float)
        th = np.broadcast_to(np.asarray(theta, dtype=float), xa.shape)
        if not np.all(self.support.contains(xa)):
            raise ValueError(f"{self.label}: increment base point outside the support")
        ok = self.support.contains(xa + th)
        out = np.full(xa.shape, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            if xa.ndim == 0:
                if ok:
                    out = self._increment_in(xa, th)
            else:
                out[ok] = self._increment_in(xa[ok], th[ok])
        return _ret(out, x)

    def log_density_ratio(self, x, y):
        """``V(x) - V(y) = log pi(y)/pi(x)``; ``-inf`` when ``y`` is outside."""
        if not np.all(self.support.contains(x)):
            raise ValueError(f"{self.label}: current state outside the support")
        return self.potential(x) - self.potential(y)

    def density(self, x):
        return np.exp(-(np.asarray(self.potential(x)) + self.log_norm))

    def expect(self, g: Callable[[float], float], quad: QuadratureCfg = DEFAULT_QUAD,
               breakpoints=()) -> float:
        """``int g(x) pi(x) dx`` over the support."""
        ln = self.log_norm

        def integrand(x):
            v = self.potential(x)
            if v == math.inf:
                return 0.0
            return g(x) * math.exp(-v - ln)

        pts = (*self.kinks(), *self.scale_points(), *breakpoints)
        return integrate_1d(integrand, self.support.lo, self.support.hi, pts, quad)[0]

    @cached_property
    def fisher_info(self) -> float:
        return fisher_information(self)


def fisher_information(target: Target, quad: QuadratureCfg = DEFAULT_QUAD) -> float:
    """``I = int V'(x)^2 pi(x) dx`` by adaptive quadrature."""
    return target.expect(lambda x: target._grad_in(np.float64(x)) ** 2, quad)


@dataclass(frozen=True)
class Gaussian(Target):
    mean: float = 0.0
    variance: float = 1.0
    support: SupportInterval = field(default_factory=SupportInterval, repr=False)
    r_split: float | None = field(default=None, repr=False)
    family: ClassVar[str] = "gaussian"

    def _validate(self):
        if not self.variance > 0:
            raise TargetError("variance must be positive")

    def _log_norm(self):
        return 0.5 * math.log(2 * math.pi * self.variance)

    def _potential_in(self, x):
        return (x - self.mean) ** 2 / (2 * self.variance)

    def _grad_in(self, x):
        return (x - self.mean) / self.variance

    def _increment_in(self, x, theta):
        return theta * (2 * (x - self.mean) + theta) / (2 * self.variance)

    def _remainder_in(self, x, theta):
        return theta * theta / (2 * self.variance) + 0 * x

    def sample(self, rng, n):
        return self.mean + math.sqrt(self.variance) * rng.standard_normal(n)

    def scale_points(self):
        s = math.sqrt(self.variance)
        return tuple(self.mean + k * s for k in (-8, -3, 0, 3, 8))

    def params(self):
        return {"mean": self.mean, "variance": self.variance}


@dataclass(frozen=True)
class BayesianLasso(Target):
    """``V(x) = U(x) + lam |x|`` with ``U = 0`` or ``U(x) = coef x^2 / 2``.

    The derivative uses ``sign(0) = -1``.
    """

    lam: float = 1.0
    smooth: str = "zero"
    coef: float = 0.0
    support: SupportInterval = field(default_factory=SupportInterval, repr=False)
    r_split: float | None = field(default=None, repr=False)
    family: ClassVar[str] = "lasso"

    def _validate(self):
        if self.lam < 0:
            raise TargetError("lambda must be nonnegative")
        if self.smooth == "zero":
            if self.coef != 0.0:
                raise TargetError("coef must be 0 when the smooth part is zero")
            if not self.lam > 0:
                raise TargetError("lambda must be positive when the smooth part is zero")
        elif self.smooth == "quadratic":
            if not self.coef > 0:
                raise TargetError("quadratic smooth part needs coef > 0")
        else:
            raise TargetError(f"smooth part must be 'zero' or 'quadratic', got {self.smooth!r}")

    def _log_norm(self):
        if self.smooth == "zero":
            return math.log(2.0 / self.lam)
        c = self.coef
        return math.log(2.0) + 0.5 * math.log(math.pi / (2 * c)) + math.log(
            sp.erfcx(self.lam / math.sqrt(2 * c))
        )

    def _potential_in(self, x):
        return 0.5 * self.coef * x * x + self.lam * np.abs(x)

    def _grad_in(self, x):
        return self.coef * x + self.lam * np.where(x > 0, 1.0, -1.0)

    def _increment_in(self, x, theta):
        return 0.5 * self.coef * theta * (2 * x + theta) + self.lam * (np.abs(x + theta) - np.abs(x))

    def _remainder_in(self, x, theta):
        y = x + theta
        crossed = (x > 0) != (y > 0)
        kink = np.where(crossed, np.abs(y) - np.abs(x) - theta * np.where(x > 0, 1.0, -1.0), 0.0)
        return 0.5 * self.coef * theta * theta + self.lam * kink

    def sample(self, rng, n):
        if self.smooth == "zero":
            return rng.laplace(0.0, 1.0 / self.lam, n)
        # each half-line is a normal N(-lam/c, 1/c) truncated to x > 0
        c = self.coef
        a = self.lam / math.sqrt(c)
        u = 1.0 - rng.random(n)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        with np.errstate(divide="ignore"):
            t = -sp.ndtri_exp(np.log(u) + sp.log_ndtr(-a))
        mag = (t - a) / math.sqrt(c)
        return sign * np.maximum(mag, 0.0)

    def kinks(self):
        return (0.0,)

    def scale_points(self):
        s = 1.0 / self.lam if self.coef == 0 else 1.0 / math.sqrt(self.coef)
        return tuple(k * s for k in (-40, -10, -3, 3, 10, 40))

    def params(self):
        p = {"lambda": self.lam, "smooth": self.smooth}
        if self.smooth == "quadratic":
            p["coef"] = self.coef
        return p


@dataclass(frozen=True)
class GeneralizedGamma(Target):
    """``pi(x) ∝ x^(a1-1) exp(-x^a2)`` on ``(0, inf)``."""

    a1: float = 7.0
    a2: float = 1.0
    r_split: float | None = 1.5
    support: SupportInterval = field(default_factory=lambda: SupportInterval(0.0, math.inf), repr=False)
    family: ClassVar[str] = "gengamma"

    def _validate(self):
        if not self.a1 > 6:
            raise TargetError("a1 must exceed 6")
        if not self.a2 > 0:
            raise TargetError("a2 must be positive")
        if not (self.r_split and self.r_split > 1):
            raise TargetError("r must exceed 1")

    def _log_norm(self):
        return math.lgamma(self.a1 / self.a2) - math.log(self.a2)

    def _potential_in(self, x):
        return x ** self.a2 - (self.a1 - 1) * np.log(x)

    def _grad_in(self, x):
        return self.a2 * x ** (self.a2 - 1) - (self.a1 - 1) / x

    def _increment_in(self, x, theta):
        rel = theta / x
        return x ** self.a2 * np.expm1(self.a2 * np.log1p(rel)) - (self.a1 - 1) * np.log1p(rel)

    def _remainder_in(self, x, theta):
        rel = theta / x
        power = x ** self.a2 * (np.expm1(self.a2 * np.log1p(rel)) - self.a2 * rel)
        return power - (self.a1 - 1) * (np.log1p(rel) - rel)

    def sample(self, rng, n):
        return rng.standard_gamma(self.a1 / self.a2, n) ** (1.0 / self.a2)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return sp.gammainc(self.a1 / self.a2, x ** self.a2)

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return sp.gammaincc(self.a1 / self.a2, x ** self.a2)

    def scale_points(self):
        mode = ((self.a1 - 1) / self.a2) ** (1.0 / self.a2)
        return (0.25 * mode, mode, 2 * mode, 4 * mode)

    def params(self):
        return {"a1": self.a1, "a2": self.a2}


@dataclass(frozen=True)
class Beta(Target):
    """``pi(x) ∝ x^(a1-1) (1-x)^(a2-1)`` on ``(0, 1)``.

    ``V'(x) = -(a1-1)/x + (a2-1)/(1-x)``, the derivative of ``V``.
    """

    a1: float = 10.0
    a2: float = 10.0
    r_split: float | None = 1.5
    support: SupportInterval = field(default_factory=lambda: SupportInterval(0.0, 1.0), repr=False)
    family: ClassVar[str] = "beta"

    def _validate(self):
        if not self.a1 > 6:
            raise TargetError("a1 must exceed 6")
        if not self.a2 > 6:
            raise TargetError("a2 must exceed 6")
        if not (self.r_split and self.r_split > 1):
            raise TargetError("r must exceed 1")

    def _log_norm(self):
        return sp.betaln(self.a1, self.a2)

    def _potential_in(self, x):
        return -(self.a1 - 1) * np.log(x) - (self.a2 - 1) * np.log1p(-x)

    def _grad_in(self, x):
        return -(self.a1 - 1) / x + (self.a2 - 1) / (1 - x)

    def _increment_in(self, x, theta):
        return -(self.a1 - 1) * np.log1p(theta / x) - (self.a2 - 1) * np.log1p(-theta / (1 - x))

    def _remainder_in(self, x, theta):
        u, w = theta / x, -theta / (1 - x)
        return -(self.a1 - 1) * (np.log1p(u) - u) - (self.a2 - 1) * (np.log1p(w) - w)

    def sample(self, rng, n):
        return rng.beta(self.a1, self.a2, n)

    def cdf(self, x):
        return sp.betainc(self.a1, self.a2, np.clip(np.asarray(x, dtype=float), 0.0, 1.0))

    def sf(self, x):
        return sp.betainc(self.a2, self.a1, np.clip(1.0 - np.asarray(x, dtype=float), 0.0, 1.0))

    def scale_points(self):
        m = (self.a1 - 1) / (self.a1 + self.a2 - 2)
        return (0.25 * m, m, m + 0.75 * (1 - m))

    def params(self):
        return {"a1": self.a1, "a2": self.a2}


FAMILIES = {cls.family: cls for cls in (Gaussian, BayesianLasso, GeneralizedGamma, Beta)}


def make_target(family: str, **params) -> Target:
    """Build a target from a family name and keyword parameters.

    Accepts the external parameter names used by the config files and the
    CLI (``lambda`` for the Lasso penalty, ``r`` for the split parameter).
    """
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise TargetError(f"unknown target family {family!r}; choose from {sorted(FAMILIES)}") from None
    params = dict(params)
    if "lambda" in params:
        params["lam"] = params.pop("lambda")
    if "r" in params:
        params["r_split"] = params.pop("r")
    try:
        return cls(**params)
    except TypeError as exc:
        raise TargetError(f"bad parameters for {family}: {exc}") from None


def shipped_targets() -> list[Target]:
    """The parameter sets exercised by the test and verification suites."""
    return [
        Gaussian(0.0, 1.0),
        BayesianLasso(1.0),
        BayesianLasso(1.0, "quadratic", 1.0),
        GeneralizedGamma(7.0, 1.0),
        GeneralizedGamma(7.0, 2.0),
        Beta(10.0, 10.0),
    ]
