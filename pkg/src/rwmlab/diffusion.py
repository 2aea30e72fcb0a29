"""Euler-Maruyama simulation of the limiting Langevin diffusion
``dY = sqrt(h) dB - (h/2) V'(Y) dt`` and distributional comparison with the
time-rescaled chain.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .limits import speed
from .rng import substream
from .rwm import first_coord_marginals
from .targets import Target

BOUNDARY_MARGIN = 1e-9
REJECTION_WARN = 0.05
PATH_BLOCK = 4096


@dataclass(frozen=True)
class SdeConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    n_paths: int = 10_000
    seed: int = 0
    boundary_rule: str = "reject-move"
    record_times: tuple[float, ...] = ()

    def __post_init__(self):
        errors = []
        if not self.dt > 0:
            errors.append("dt must be positive")
        if not self.t_end >= 0:
            errors.append("t_end must be nonnegative")
        if self.t_end > 0 and self.dt > self.t_end:
            errors.append("dt must not exceed t_end")
        if self.n_paths < 1:
            errors.append("n_paths must be >= 1")
        if self.boundary_rule != "reject-move":
            errors.append("boundary_rule must be 'reject-move'")
        if any(t < 0 or t > self.t_end for t in self.record_times):
            errors.append("record_times must lie in [0, t_end]")
        if errors:
            raise ConfigError(errors)


@dataclass
class DiffusionSample:
    initial: np.ndarray
    terminal: np.ndarray
    rejection_fraction: float
    warning: bool
    n_steps: int
    intermediate: dict[float, np.ndarray] = field(default_factory=dict, repr=False)


def euler_maruyama_paths(target: Target, ell: float, cfg: SdeConfig,
                         fisher_info: float | None = None) -> DiffusionSample:
    """Stationary-start Euler-Maruyama paths of the Langevin limit.

    For interval targets a step landing within ``BOUNDARY_MARGIN`` of (or
    beyond) an endpoint is rejected and the state kept. Paths are drawn in
    blocks of ``PATH_BLOCK`` with one generator per block.
    """
    I = target.fisher_info if fisher_info is None else fisher_info
    h = speed(I, ell) if ell > 0 else 0.0
    n_steps = int(round(cfg.t_end / cfg.dt)) if cfg.t_end > 0 else 0
    dt = cfg.t_end / n_steps if n_steps else 0.0
    lo = target.support.lo + BOUNDARY_MARGIN
    hi = target.support.hi - BOUNDARY_MARGIN
    bounded = target.support.bounded
    record_at = {int(round(t / dt)) if dt else 0: t for t in cfg.record_times}

    initial, terminal = [], []
    inter: dict[float, list[np.ndarray]] = {t: [] for t in cfg.record_times}
    rejected = 0
    for blk, start in enumerate(range(0, cfg.n_paths, PATH_BLOCK)):
        m = min(PATH_BLOCK, cfg.n_paths - start)
        rng = substream(cfg.seed, "sde", blk)
        y = target.sample(rng, m)
        initial.append(y.copy())
        if 0 in record_at:
            inter[record_at[0]].append(y.copy())
        if h > 0:
            drift = 0.5 * h * dt
            vol = math.sqrt(h * dt)
            for k in range(1, n_steps + 1):
                prop = y - drift * target.grad_potential(y) + vol * rng.standard_normal(m)
                if bounded:
                    ok = (prop > lo) & (prop < hi)
                    rejected += int(m - ok.sum())
                    y = np.where(ok, prop, y)
                else:
                    y = prop
                if k in record_at:
                    inter[record_at[k]].append(y.copy())
        else:
            for k in range(1, n_steps + 1):
                if k in record_at:
                    inter[record_at[k]].append(y.copy())
        terminal.append(y)
    total = cfg.n_paths * n_steps
    frac = rejected / total if total else 0.0
    warn = frac > REJECTION_WARN
    if warn:
        warnings.warn(f"boundary rejection fraction {frac:.3f} above {REJECTION_WARN}; reduce dt",
                      RuntimeWarning, stacklevel=2)
    return DiffusionSample(
        np.concatenate(initial), np.concatenate(terminal), frac, warn, n_steps,
        {t: np.concatenate(v) for t, v in inter.items()},
    )


def ks_distance(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F_a - F_b|``."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_distance needs two nonempty samples")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value ``c(alpha) sqrt((n+m)/(n m))``."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def bootstrap_ks_se(sample_a, sample_b, n_boot: int = 200, seed: int = 0) -> float:
    """Bootstrap standard error of the KS statistic (both samples resampled)."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    rng = substream(seed, "ks-bootstrap")
    stats = [
        ks_distance(rng.choice(a, a.size), rng.choice(b, b.size)) for _ in range(n_boot)
    ]
    return float(np.std(stats, ddof=1))


@dataclass
class Comparison:
    d: int
    t: float
    ks: float
    n_chain: int
    n_diffusion: int
    seeds: dict
    quantity: str
    chain_sample: np.ndarray = field(repr=False)
    diffusion_sample: np.ndarray = field(repr=False)
    rejection_fraction: float = 0.0

    def to_dict(self) -> dict:
        return {
            "d": self.d, "t": self.t, "ks": self.ks, "n": self.n_chain,
            "n_diffusion": self.n_diffusion, "quantity": self.quantity,
            "seeds": self.seeds, "rejection_fraction": self.rejection_fraction,
        }


def compare_chain_to_diffusion(target: Target, ell: float, d: int, t: float, n_replicas: int,
                               seed: int = 0, dt: float = 1e-3,
                               quantity: str = "marginal") -> Comparison:
    """KS distance between ``Y^d_{t,1}`` over chain replicas and ``Y_t`` of the diffusion.

    ``quantity='marginal'`` compares the laws of ``Y_t``; ``'increment'``
    compares ``Y_t - Y_0``, which is sensitive to the diffusion speed.
    Chains and diffusion paths use independent substreams.
    """
    if quantity not in ("marginal", "increment"):
        raise ValueError("quantity must be 'marginal' or 'increment'")
    chain_seed, sde_seed = seed, seed + 1
    rngs = [substream(chain_seed, "compare", target.family, d, r) for r in range(n_replicas)]
    times = [0.0, t] if quantity == "increment" else [t]
    ys = first_coord_marginals(target, d, ell, times, rngs)
    chain = ys[:, -1] - ys[:, 0] if quantity == "increment" else ys[:, 0]
    if t > 0:
        sde = euler_maruyama_paths(target, ell, SdeConfig(dt=min(dt, t), t_end=t,
                                                          n_paths=n_replicas, seed=sde_seed))
        diff = sde.terminal - sde.initial if quantity == "increment" else sde.terminal
        rej = sde.rejection_fraction
    else:
        y0 = target.sample(substream(sde_seed, "sde", 0), n_replicas)
        diff = np.zeros(n_replicas) if quantity == "increment" else y0
        rej = 0.0
    return Comparison(d, t, ks_distance(chain, diff), n_replicas, n_replicas,
                      {"chain": chain_seed, "diffusion": sde_seed}, quantity, chain, diff, rej)
