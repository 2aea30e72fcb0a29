import math

import numpy as np
import pytest

from oracles import finite_d_gaussian
from rwmlab.diffusion import ks_critical, ks_distance
from rwmlab.errors import ConfigError
from rwmlab.limits import optimal_scaling
from rwmlab.rng import substream
from rwmlab.rwm import (CurveRow, RwmConfig, batch_means_se, cell_rng, esjd_curve,
                        interpolated_first_coord, pool, run_chain, rwm_step, simulate_chains)
from rwmlab.targets import BayesianLasso, Beta, Gaussian, GeneralizedGamma


class ForcedStream:
    """Stand-in generator returning fixed normals and uniforms."""

    def __init__(self, z, u):
        self.z, self.u = z, u

    def standard_normal(self, d):
        return np.broadcast_to(np.asarray(self.z, dtype=float), (d,)).copy()

    def random(self):
        return self.u


# --- config ---------------------------------------------------------------

def test_config_collects_all_errors():
    with pytest.raises(ConfigError) as info:
        RwmConfig(d=0, ell=-1.0, n_steps=0, burn_in=-2)
    assert len(info.value.errors) == 4


def test_config_record_horizon():
    with pytest.raises(ConfigError, match="record time"):
        RwmConfig(d=10, ell=1.0, n_steps=5, record_first_coord=True, record_times=(1.0,))
    with pytest.raises(ConfigError, match="sorted"):
        RwmConfig(d=10, ell=1.0, n_steps=50, record_first_coord=True, record_times=(1.0, 0.5))


# --- single step ----------------------------------------------------------

@pytest.mark.parametrize("target", [Gaussian(), Beta(10, 10), BayesianLasso(1.0)],
                         ids=lambda t: t.family)
def test_zero_increment_always_accepted(target):
    x = np.full(7, 0.4)
    y, acc, jump = rwm_step(target, x, 2.0, 7, ForcedStream(0.0, 0.999999))
    assert acc and jump == 0.0 and np.array_equal(y, x)


def test_leaving_support_is_rejected():
    x = np.full(5, 0.999)
    y, acc, jump = rwm_step(Beta(10, 10), x, 5.0, 5, ForcedStream(1.0, 1e-12))
    assert not acc and jump == 0.0 and np.array_equal(y, x)


def test_gaussian_step_probability():
    # 1 ^ exp(V(0) - V(1)) = exp(-1/2) = 0.60653...
    g = Gaussian()
    _, acc, jump = rwm_step(g, np.zeros(1), 1.0, 1, ForcedStream(1.0, 0.6065))
    assert acc and jump == 1.0
    _, acc, _ = rwm_step(g, np.zeros(1), 1.0, 1, ForcedStream(1.0, 0.6066))
    assert not acc


def test_gaussian_step_frequency():
    g = Gaussian()
    rng = np.random.default_rng(4)

    class Mixed(ForcedStream):
        def random(self):
            return rng.random()

    n = 40_000
    hits = sum(rwm_step(g, np.zeros(1), 1.0, 1, Mixed(1.0, None))[1] for _ in range(n))
    p = math.exp(-0.5)
    assert abs(hits / n - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_step_agrees_with_batched_kernel():
    # the vectorised kernel and rwm_step see the same draws
    t = GeneralizedGamma(7, 1)
    d, ell = 6, 1.3
    res = simulate_chains(t, d, [ell], [substream(9, "k")], 1, 0, [0, 1])
    rng = substream(9, "k")
    x = t.sample(rng, d)
    z = rng.standard_normal((256, d))
    u = rng.random(256)
    y = x + ell / math.sqrt(d) * z[0]
    accept = math.log(u[0]) < float(np.sum(t.log_density_ratio(x, y)))
    assert res.records[0][0] == x[0]
    assert res.records[1][0] == (y[0] if accept else x[0])


# --- run_chain ------------------------------------------------------------

def test_run_chain_deterministic():
    cfg = RwmConfig(d=20, ell=2.0, n_steps=3000, seed=42)
    a = run_chain(Beta(10, 10), cfg)
    b = run_chain(Beta(10, 10), cfg)
    assert a == b


def test_small_scale_accepts_almost_everything():
    for t in (Gaussian(), Beta(10, 10), BayesianLasso(1.0), GeneralizedGamma(7, 2)):
        s = run_chain(t, RwmConfig(d=10, ell=1e-4, n_steps=2000, seed=1))
        assert s.acc_rate >= 0.999


def test_summary_ranges():
    s = run_chain(BayesianLasso(1.0), RwmConfig(d=30, ell=2.0, n_steps=4000, seed=3))
    assert 0 <= s.acc_rate <= 1 and s.acc_se >= 0 and s.esjd >= 0 and s.esjd_se >= 0
    assert s.n_steps == 4000 and s.d == 30 and s.ell == 2.0


@pytest.mark.parametrize("ell", [1.0, 2.38, 4.0])
def test_chain_matches_exact_finite_dimension_oracle(ell):
    d = 10
    acc_ref, esjd_ref = finite_d_gaussian(d, ell)
    rngs = [cell_rng(5, "gaussian", d, 0, r) for r in range(4)]
    sums = [run_chain(Gaussian(), RwmConfig(d=d, ell=ell, n_steps=25_000), rng) for rng in rngs]
    acc, acc_se, esjd, esjd_se = pool(sums)
    assert abs(acc - acc_ref) <= 4 * acc_se
    assert abs(esjd - esjd_ref) <= 4 * esjd_se


def test_burn_in_changes_window_only():
    cfg0 = RwmConfig(d=5, ell=1.0, n_steps=1000, burn_in=0, seed=2)
    cfg1 = RwmConfig(d=5, ell=1.0, n_steps=1000, burn_in=500, seed=2)
    assert run_chain(Gaussian(), cfg0) != run_chain(Gaussian(), cfg1)


def test_batch_means_constant_series():
    sums = np.full((1, 32), 5.0)
    m, se = batch_means_se(sums, np.full(32, 10.0))
    assert m[0] == 0.5 and se[0] == 0.0


# --- esjd_curve -----------------------------------------------------------

def test_single_point_grid_equals_pooled_run_chain():
    t = Beta(10, 10)
    rows = esjd_curve(t, 10, [0.3], replicas=3, n_steps=2000, base_seed=7)
    assert len(rows) == 1
    sums = [run_chain(t, RwmConfig(d=10, ell=0.3, n_steps=2000), cell_rng(7, "beta", 10, 0, r))
            for r in range(3)]
    acc, acc_se, esjd, esjd_se = pool(sums)
    assert rows[0] == CurveRow("beta", 10, 0.3, acc, acc_se, esjd, esjd_se, 2000, 3, 7)


@pytest.mark.parametrize("grid", [[], [0.5, 0.4], [0.0, 1.0], [1.0, 1.0]])
def test_curve_grid_validation(grid):
    with pytest.raises(ConfigError):
        esjd_curve(Gaussian(), 5, grid, 2, 100, 0)


def test_curve_replica_validation():
    with pytest.raises(ConfigError):
        esjd_curve(Gaussian(), 5, [1.0], 0, 100, 0)


@pytest.mark.invariant
@pytest.mark.parametrize("target", [Gaussian(), Beta(10, 10), BayesianLasso(1.0)],
                         ids=lambda t: t.family)
def test_acceptance_nonincreasing_in_ell(target):
    star = optimal_scaling(target.fisher_info)[0]
    grid = list(np.linspace(0.2 * star, 2.5 * star, 10))
    rows = esjd_curve(target, 20, grid, 4, 5000, 11)
    for a, b in zip(rows, rows[1:]):
        assert b.acc_rate <= a.acc_rate + 3 * math.hypot(a.acc_se, b.acc_se)


def test_gaussian_esjd_peak_near_optimal_scale():
    grid = list(np.linspace(1.38, 3.38, 9))
    rows = esjd_curve(Gaussian(), 100, grid, 4, 20_000, 13)
    best = max(rows, key=lambda r: r.esjd).ell
    assert abs(best - optimal_scaling(1.0)[0]) <= grid[1] - grid[0]


# --- interpolated process -------------------------------------------------

def test_interpolation_rules():
    t, d = GeneralizedGamma(7, 1), 8
    cfg = RwmConfig(d=d, ell=1.5, n_steps=40, record_first_coord=True, record_times=(4.0,))
    k = 13
    times = [0.0, k / d, (k + 0.5) / d, (k + 1) / d]
    y = interpolated_first_coord(t, cfg, times, substream(3, "interp"))
    x0 = t.sample(substream(3, "interp"), d)[0]
    assert y[0] == x0
    assert y[2] == pytest.approx(0.5 * (y[1] + y[3]), rel=1e-15)
    # d t = 3.0000000000000004 snaps to the recorded state X_3
    cfg10 = RwmConfig(d=10, ell=1.5, n_steps=40)
    noisy = interpolated_first_coord(t, cfg10, [0.1 * 3], substream(4, "interp"))[0]
    res = simulate_chains(t, 10, [1.5], [substream(4, "interp")], 40, 0, [3])
    assert noisy == res.records[3][0]


def test_interpolation_beyond_horizon():
    cfg = RwmConfig(d=10, ell=1.0, n_steps=20)
    with pytest.raises(IndexError):
        interpolated_first_coord(Gaussian(), cfg, [2.5])


# --- invariants -----------------------------------------------------------

@pytest.mark.invariant
def test_states_stay_in_support():
    for t in (Beta(10, 10), GeneralizedGamma(7, 1), GeneralizedGamma(7, 2)):
        rngs = [substream(1, "sup", r) for r in range(16)]
        simulate_chains(t, 10, [3.0 / math.sqrt(t.fisher_info)] * 16, rngs, 3000,
                        check_support=True)


@pytest.mark.invariant
@pytest.mark.slow
def test_stationarity_preserved():
    """X_0 and X_n (n = 1000 d, d = 10) replicas agree in law (KS at 1%)."""
    d, n_rep = 10, 2000
    crit = ks_critical(n_rep, n_rep, 0.01)
    passes = []
    for t in (Gaussian(), BayesianLasso(1.0), GeneralizedGamma(7, 1), Beta(10, 10)):
        ell = optimal_scaling(t.fisher_info)[0]
        for trial in range(5):
            rngs = [substream(trial, "stationarity", t.family, r) for r in range(n_rep)]
            res = simulate_chains(t, d, [ell] * n_rep, rngs, 1000 * d, 0, [0, 1000 * d])
            passes.append(ks_distance(res.records[0], res.records[1000 * d]) < crit)
    assert sum(passes) >= 0.95 * len(passes)
