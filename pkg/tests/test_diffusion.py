import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rwmlab.diffusion import (SdeConfig, bootstrap_ks_se, compare_chain_to_diffusion,
                              euler_maruyama_paths, ks_critical, ks_distance)
from rwmlab.errors import ConfigError
from rwmlab.limits import optimal_scaling
from rwmlab.rng import substream
from rwmlab.targets import BayesianLasso, Beta, Gaussian, GeneralizedGamma

FAMILIES = [Gaussian(), BayesianLasso(1.0), GeneralizedGamma(7, 1), Beta(10, 10)]


def _ell_star(t):
    return optimal_scaling(t.fisher_info)[0]


# --- config ---------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError) as info:
        SdeConfig(dt=0.0, t_end=-1.0, n_paths=0, boundary_rule="reflect")
    assert len(info.value.errors) == 4
    with pytest.raises(ConfigError, match="dt must not exceed"):
        SdeConfig(dt=2.0, t_end=1.0)
    assert SdeConfig().dt <= 1e-2


# --- Euler-Maruyama -------------------------------------------------------

def test_zero_speed_keeps_initial_state():
    s = euler_maruyama_paths(Beta(10, 10), 0.0, SdeConfig(n_paths=500, t_end=0.5, dt=1e-2))
    assert np.array_equal(s.initial, s.terminal)
    assert s.rejection_fraction == 0.0


def test_gaussian_terminal_is_stationary():
    s = euler_maruyama_paths(Gaussian(), 2.38, SdeConfig(n_paths=100_000, seed=3))
    y, n = s.terminal, s.terminal.size
    assert abs(y.mean()) <= 5 * y.std(ddof=1) / math.sqrt(n)
    sq = (y - y.mean()) ** 2
    assert abs(y.var(ddof=1) - 1.0) <= 5 * sq.std(ddof=1) / math.sqrt(n)


@pytest.mark.parametrize("ell", [2.38, 0.257])
def test_beta_terminal_mean(ell):
    s = euler_maruyama_paths(Beta(10, 10), ell, SdeConfig(n_paths=100_000, seed=4))
    y = s.terminal
    assert abs(y.mean() - 0.5) <= 5 * y.std(ddof=1) / math.sqrt(y.size)


def test_reproducible_per_seed():
    cfg = SdeConfig(n_paths=5000, t_end=0.2, dt=1e-3, seed=9)
    a = euler_maruyama_paths(GeneralizedGamma(7, 2), 0.8, cfg)
    b = euler_maruyama_paths(GeneralizedGamma(7, 2), 0.8, cfg)
    assert np.array_equal(a.terminal, b.terminal)
    c = euler_maruyama_paths(GeneralizedGamma(7, 2), 0.8, SdeConfig(n_paths=5000, t_end=0.2,
                                                                    dt=1e-3, seed=10))
    assert not np.array_equal(a.terminal, c.terminal)


def test_intermediate_times_recorded():
    cfg = SdeConfig(n_paths=300, t_end=0.5, dt=1e-2, record_times=(0.0, 0.25, 0.5))
    s = euler_maruyama_paths(Gaussian(), 1.0, cfg)
    assert np.array_equal(s.intermediate[0.0], s.initial)
    assert np.array_equal(s.intermediate[0.5], s.terminal)
    assert s.intermediate[0.25].shape == (300,)


@pytest.mark.invariant
@pytest.mark.parametrize("target", [Beta(10, 10), Beta(7, 30), GeneralizedGamma(7, 1),
                                    GeneralizedGamma(7, 2)], ids=lambda t: t.label)
def test_boundary_safety(target):
    # deliberately coarse steps so that the boundary rule is exercised
    cfg = SdeConfig(n_paths=4000, t_end=1.0, dt=0.05, record_times=(0.5,))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s = euler_maruyama_paths(target, 3 * _ell_star(target), cfg)
    for arr in (s.initial, s.terminal, s.intermediate[0.5]):
        assert np.all(target.support.contains(arr))


def test_rejection_warning_flag():
    # steps of length 2 overshoot the unit interval from near the edges
    cfg = SdeConfig(n_paths=2000, t_end=10.0, dt=2.0)
    with pytest.warns(RuntimeWarning, match="rejection fraction"):
        s = euler_maruyama_paths(Beta(10, 10), 0.257, cfg)
    assert s.warning and s.rejection_fraction > 0.05
    quiet = euler_maruyama_paths(Beta(10, 10), 0.257, SdeConfig(n_paths=2000, t_end=0.1))
    assert not quiet.warning


@pytest.mark.invariant
@pytest.mark.parametrize("target", FAMILIES, ids=lambda t: t.label)
def test_marginal_invariance(target):
    n = 2000
    crit = ks_critical(n, n, 0.01)
    ok = 0
    for trial in range(20):
        s = euler_maruyama_paths(target, _ell_star(target), SdeConfig(n_paths=n, seed=100 + trial))
        fresh = target.sample(substream(trial, "fresh", target.family), n)
        ok += ks_distance(s.terminal, fresh) < crit
    assert ok >= 19


@pytest.mark.invariant
def test_dt_robustness():
    n = 100_000
    out = []
    for dt in (1e-3, 5e-4):
        y = euler_maruyama_paths(Gaussian(), 2.38, SdeConfig(dt=dt, n_paths=n, seed=21)).terminal
        sq = (y - y.mean()) ** 2
        out.append((y.mean(), y.std(ddof=1) / math.sqrt(n), y.var(ddof=1),
                    sq.std(ddof=1) / math.sqrt(n)))
    (m1, sm1, v1, sv1), (m2, sm2, v2, sv2) = out
    assert abs(m1 - m2) < 3 * math.hypot(sm1, sm2)
    assert abs(v1 - v2) < 3 * math.hypot(sv1, sv2)


# --- KS statistic ---------------------------------------------------------

def test_ks_examples():
    x = np.random.default_rng(0).normal(size=50)
    assert ks_distance(x, x) == 0.0
    assert ks_distance([0.0], [1.0]) == 1.0
    with pytest.raises(ValueError):
        ks_distance([], [1.0])


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=60),
       st.lists(st.floats(-5, 5), min_size=1, max_size=60))
def test_ks_matches_scipy(a, b):
    assert ks_distance(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


def test_ks_critical_value():
    assert ks_critical(10_000, 10_000) == pytest.approx(1.6276 * math.sqrt(2e-4), rel=1e-4)


def test_ks_null_rejection_rate():
    rng = np.random.default_rng(77)
    crit = ks_critical(10_000, 10_000, 0.01)
    below = sum(ks_distance(rng.normal(size=10_000), rng.normal(size=10_000)) < crit
                for _ in range(100))
    assert below >= 95


def test_bootstrap_se_positive_and_reproducible():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=500), rng.normal(0.1, 1, size=500)
    se1 = bootstrap_ks_se(a, b, 200, seed=3)
    assert se1 > 0 and se1 == bootstrap_ks_se(a, b, 200, seed=3)


# --- chain vs diffusion ---------------------------------------------------

def test_compare_at_time_zero():
    n = 2000
    crit = ks_critical(n, n, 0.01)
    below = 0
    for trial in range(20):
        c = compare_chain_to_diffusion(Gaussian(), 2.38, 20, 0.0, n, seed=2 * trial)
        below += c.ks < crit
    assert below >= 19


def test_compare_report_fields():
    c = compare_chain_to_diffusion(Beta(10, 10), 0.257, 10, 0.5, 300, seed=5)
    d = c.to_dict()
    for key in ("d", "t", "ks", "n", "seeds"):
        assert key in d
    assert d["seeds"] == {"chain": 5, "diffusion": 6}
    assert np.all(Beta(10, 10).support.contains(c.chain_sample))


def test_compare_increment_quantity():
    c = compare_chain_to_diffusion(Gaussian(), 2.38, 10, 0.0, 100, seed=1, quantity="increment")
    assert np.all(c.chain_sample == 0) and np.all(c.diffusion_sample == 0)
    with pytest.raises(ValueError):
        compare_chain_to_diffusion(Gaussian(), 2.38, 10, 1.0, 10, quantity="path")
