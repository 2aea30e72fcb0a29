"""Random Walk Metropolis on product targets ``pi^d = pi ⊗ ... ⊗ pi``.

Proposal ``y = x + ell d^{-1/2} Z`` with ``Z ~ N(0, I_d)``, accepted when
``log U < sum_i V(x_i) - V(y_i)``. Chains start from the stationary law.

Many chains (different ``ell`` or replicas, same ``d``) are advanced together
as rows of one array; every chain consumes only its own generator, in fixed
blocks, so a chain's trajectory does not depend on which other chains share
its batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .rng import substream
from .targets import Target

N_BATCHES = 32
BLOCK = 256


@dataclass(frozen=True)
class RwmConfig:
    d: int
    ell: float
    n_steps: int
    burn_in: int = 0
    seed: int = 0
    record_first_coord: bool = False
    record_times: tuple[float, ...] = ()

    def __post_init__(self):
        errors = []
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 1):
            errors.append(f"d must be an integer >= 1, got {self.d!r}")
        if not (self.ell > 0 and math.isfinite(self.ell)):
            errors.append(f"ell must be positive, got {self.ell!r}")
        if not self.n_steps >= 1:
            errors.append(f"n_steps must be >= 1, got {self.n_steps!r}")
        if not self.burn_in >= 0:
            errors.append(f"burn_in must be >= 0, got {self.burn_in!r}")
        times = tuple(float(t) for t in self.record_times)
        object.__setattr__(self, "record_times", times)
        if any(t < 0 for t in times):
            errors.append("record_times must be nonnegative")
        if list(times) != sorted(times):
            errors.append("record_times must be sorted ascending")
        if self.record_first_coord and times and not errors:
            if max(times) * self.d > self.n_steps + 1e-9:
                errors.append(
                    f"record time {max(times)} needs {max(times) * self.d:g} steps, "
                    f"only {self.n_steps} simulated"
                )
        if errors:
            raise ConfigError(errors)


@dataclass
class ChainSummary:
    acc_rate: float
    acc_se: float
    esjd: float
    esjd_se: float
    n_steps: int
    d: int
    ell: float
    first_coord_marginals: dict[float, list[float]] | None = field(default=None, repr=False)


def batch_means_se(batch_sums: np.ndarray, batch_counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and batch-means standard error along the last axis."""
    means = batch_sums / batch_counts
    total = batch_sums.sum(axis=-1) / batch_counts.sum()
    k = means.shape[-1]
    if k < 2:
        return total, np.full(np.shape(total), np.nan)
    se = np.sqrt(means.var(axis=-1, ddof=1) / k)
    return total, se


def rwm_step(target: Target, state: np.ndarray, ell: float, d: int, rng):
    """One RWM transition.

    Returns ``(new_state, accepted, squared_jump)``; ``squared_jump`` is
    ``(ell^2/d) |Z|^2`` on acceptance and ``0`` otherwise.
    """
    state = np.asarray(state, dtype=float)
    z = np.asarray(rng.standard_normal(d), dtype=float)
    u = rng.random()
    y = state + (ell / math.sqrt(d)) * z
    log_ratio = float(np.sum(target.log_density_ratio(state, y)))
    with np.errstate(divide="ignore"):
        accepted = bool(math.log(u) < log_ratio) if u > 0 else log_ratio > -math.inf
    if not accepted:
        return state, False, 0.0
    return y, True, ell * ell / d * float(z @ z)


def _step_index(times: Sequence[float], d: int) -> list[tuple[int, int, float]]:
    """``(floor(dt), ceil(dt), frac)`` for each time, snapping near-integers."""
    out = []
    for t in times:
        dt = d * t
        r = round(dt)
        if abs(dt - r) <= 1e-9 * max(1.0, dt):
            dt = float(r)
        lo = math.floor(dt)
        hi = math.ceil(dt)
        out.append((lo, hi, dt - lo))
    return out


def interpolate(path_first_coord: dict[int, float], d: int, times: Sequence[float]) -> list[float]:
    """Linear interpolation of the time-rescaled chain (``Y_{k/d} = X_k``)."""
    vals = []
    for lo, hi, frac in _step_index(times, d):
        if lo == hi:
            vals.append(path_first_coord[lo])
        else:
            vals.append((1.0 - frac) * path_first_coord[lo] + frac * path_first_coord[hi])
    return vals


@dataclass
class _BatchResult:
    acc_sums: np.ndarray
    jump_sums: np.ndarray
    counts: np.ndarray
    records: dict[int, np.ndarray]


def simulate_chains(
    target: Target,
    d: int,
    ells: Sequence[float],
    rngs: Sequence[np.random.Generator],
    n_steps: int,
    burn_in: int = 0,
    record_steps: Sequence[int] = (),
    check_support: bool = False,
) -> _BatchResult:
    """Advance ``len(ells)`` independent chains of dimension ``d``.

    Chain ``c`` uses scale ``ells[c]`` and generator ``rngs[c]``. Statistics
    are accumulated into ``N_BATCHES`` consecutive batches of the
    post-burn-in steps. ``record_steps`` are post-burn-in step indices at
    which the first coordinate is stored (``0`` is the state after burn-in).
    """
    n = len(ells)
    ells = np.asarray(ells, dtype=float)
    s = (ells / math.sqrt(d))[:, None]
    s2 = s[:, 0] ** 2
    x = np.stack([target.sample(r, d) for r in rngs])
    vx = target.potential_array(x)

    n_batches = min(N_BATCHES, n_steps)
    batch_of = (np.arange(n_steps) * n_batches) // n_steps
    counts = np.bincount(batch_of, minlength=n_batches).astype(float)
    acc_sums = np.zeros((n, n_batches))
    jump_sums = np.zeros((n, n_batches))
    wanted = set(int(k) for k in record_steps)
    records: dict[int, np.ndarray] = {}
    if 0 in wanted and burn_in == 0:
        records[0] = x[:, 0].copy()

    total = burn_in + n_steps
    done = 0
    while done < total:
        b = min(BLOCK, total - done)
        zb = np.stack([r.standard_normal((b, d)) for r in rngs])
        with np.errstate(divide="ignore"):
            logu = np.log(np.stack([r.random(b) for r in rngs]))
        zz = (zb * zb).sum(axis=-1)
        for j in range(b):
            y = x + s * zb[:, j, :]
            vy = target.potential_array(y)
            log_ratio = (vx - vy).sum(axis=1)
            acc = logu[:, j] < log_ratio
            x = np.where(acc[:, None], y, x)
            vx = np.where(acc[:, None], vy, vx)
            k = done + j - burn_in  # post-burn-in index of this transition
            if k >= 0:
                bi = batch_of[k]
                acc_sums[:, bi] += acc
                jump_sums[:, bi] += np.where(acc, s2 * zz[:, j], 0.0)
                if k + 1 in wanted:
                    records[k + 1] = x[:, 0].copy()
            elif k == -1 and 0 in wanted:
                records[0] = x[:, 0].copy()
        if check_support and not np.all(target.support.contains(x)):
            raise AssertionError("chain state left the support")
        done += b
    return _BatchResult(acc_sums, jump_sums, counts, records)


def _summaries(target, d, ells, res: _BatchResult, n_steps, times=()):
    acc, acc_se = batch_means_se(res.acc_sums, res.counts)
    esjd, esjd_se = batch_means_se(res.jump_sums, res.counts)
    out = []
    for c, ell in enumerate(ells):
        marg = None
        if times:
            path = {k: float(v[c]) for k, v in res.records.items()}
            marg = {t: [y] for t, y in zip(times, interpolate(path, d, times))}
        out.append(ChainSummary(float(acc[c]), float(acc_se[c]), float(esjd[c]),
                                float(esjd_se[c]), n_steps, d, float(ell), marg))
    return out


def _record_steps(times, d):
    steps = set()
    for lo, hi, _ in _step_index(times, d):
        steps.update((lo, hi))
    return sorted(steps)


def run_chain(target: Target, cfg: RwmConfig, rng: np.random.Generator | None = None) -> ChainSummary:
    """Simulate one stationary-start chain and summarise it."""
    if rng is None:
        rng = substream(cfg.seed)
    times = cfg.record_times if cfg.record_first_coord else ()
    res = simulate_chains(target, cfg.d, [cfg.ell], [rng], cfg.n_steps, cfg.burn_in,
                          _record_steps(times, cfg.d))
    return _summaries(target, cfg.d, [cfg.ell], res, cfg.n_steps, times)[0]


def interpolated_first_coord(target: Target, cfg: RwmConfig, times: Sequence[float],
                             rng: np.random.Generator | None = None) -> list[float]:
    """``Y^d_t`` (first coordinate) at each of ``times`` for one chain."""
    times = [float(t) for t in times]
    if times and max(times) * cfg.d > cfg.n_steps + 1e-9:
        raise IndexError(f"time {max(times)} is beyond the simulated horizon {cfg.n_steps / cfg.d}")
    if rng is None:
        rng = substream(cfg.seed)
    res = simulate_chains(target, cfg.d, [cfg.ell], [rng], cfg.n_steps, cfg.burn_in,
                          _record_steps(times, cfg.d))
    path = {k: float(v[0]) for k, v in res.records.items()}
    return interpolate(path, cfg.d, times)


def first_coord_marginals(target: Target, d: int, ell: float, times: Sequence[float],
                          rngs: Sequence[np.random.Generator]) -> np.ndarray:
    """``Y^d_t`` for many independent replicas; shape ``(len(rngs), len(times))``."""
    times = [float(t) for t in times]
    n_steps = max(1, math.ceil(max(times) * d - 1e-9)) if times else 1
    steps = _record_steps(times, d)
    res = simulate_chains(target, d, [ell] * len(rngs), rngs, n_steps, 0, steps)
    out = np.empty((len(rngs), len(times)))
    for c in range(len(rngs)):
        path = {k: float(v[c]) for k, v in res.records.items()}
        out[c] = interpolate(path, d, times)
    return out


@dataclass
class CurveRow:
    family: str
    d: int
    ell: float
    acc_rate: float
    acc_se: float
    esjd: float
    esjd_se: float
    n_steps: int
    replicas: int
    seed: int


CURVE_COLUMNS = ("family", "d", "ell", "acc_rate", "acc_se", "esjd", "esjd_se",
                 "n_steps", "replicas", "seed")


def pool(summaries: Sequence[ChainSummary]) -> tuple[float, float, float, float]:
    """Replica-pooled ``(acc, acc_se, esjd, esjd_se)`` for equal-length chains."""
    r = len(summaries)
    acc = sum(s.acc_rate for s in summaries) / r
    esjd = sum(s.esjd for s in summaries) / r
    acc_se = math.sqrt(sum(s.acc_se ** 2 for s in summaries)) / r
    esjd_se = math.sqrt(sum(s.esjd_se ** 2 for s in summaries)) / r
    return acc, acc_se, esjd, esjd_se


def cell_rng(base_seed: int, family: str, d: int, ell_index: int, replica: int) -> np.random.Generator:
    return substream(base_seed, family, d, ell_index, replica)


def curve_cells(target: Target, d: int, ell_grid: Sequence[float], ell_indices: Sequence[int],
                replicas: int, n_steps: int, base_seed: int, burn_in: int = 0) -> list[CurveRow]:
    """Rows for a subset of grid indices; all their chains run as one batch."""
    ells, rngs = [], []
    for i in ell_indices:
        for r in range(replicas):
            ells.append(float(ell_grid[i]))
            rngs.append(cell_rng(base_seed, target.family, d, i, r))
    res = simulate_chains(target, d, ells, rngs, n_steps, burn_in)
    sums = _summaries(target, d, ells, res, n_steps)
    rows = []
    for j, i in enumerate(ell_indices):
        acc, acc_se, esjd, esjd_se = pool(sums[j * replicas:(j + 1) * replicas])
        rows.append(CurveRow(target.family, d, float(ell_grid[i]), acc, acc_se, esjd, esjd_se,
                             n_steps, replicas, base_seed))
    return rows


def esjd_curve(target: Target, d: int, ell_grid: Sequence[float], replicas: int, n_steps: int,
               base_seed: int, burn_in: int = 0) -> list[CurveRow]:
    """Acceptance rate and ESJD along an ascending ``ell`` grid."""
    ell_grid = [float(e) for e in ell_grid]
    if not ell_grid:
        raise ConfigError("ell_grid must be nonempty")
    if any(e <= 0 for e in ell_grid) or any(b <= a for a, b in zip(ell_grid, ell_grid[1:])):
        raise ConfigError("ell_grid must be positive and strictly ascending")
    if replicas < 1:
        raise ConfigError("replicas must be >= 1")
    return curve_cells(target, d, ell_grid, range(len(ell_grid)), replicas, n_steps, base_seed,
                       burn_in)
