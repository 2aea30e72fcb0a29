import pytest

from rwmlab.config import (DEFAULT_N_STEPS, DEFAULT_REPLICAS, default_workers, load_config,
                           parse_config)
from rwmlab.errors import ConfigError
from rwmlab.limits import optimal_scaling

MINIMAL = "target = gaussian\nd_list = [10]\n"


def errors_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.family == "gaussian" and cfg.d_list == (10,)
    assert cfg.n_steps == DEFAULT_N_STEPS == 100_000
    assert cfg.replicas == DEFAULT_REPLICAS == 4
    assert cfg.base_seed == 0 and cfg.burn_in == 0 and cfg.workers is None
    star = optimal_scaling(1.0)[0]
    assert len(cfg.ell_grid) == 20
    assert cfg.ell_grid[0] == pytest.approx(0.1 * star) and cfg.ell_grid[-1] == pytest.approx(3 * star)


def test_full_config():
    cfg = parse_config("""
        # figure recipe
        [experiment]
        target = beta
        d_list = 10, 50, 100
        n_steps = 2e4
        replicas = 8
        workers = auto

        [target]
        a1 = 10
        a2 = 10

        [ell_grid]
        start = 0.05
        stop = 0.7
        count = 20

        [output]
        dir = out/fig
    """)
    assert cfg.params == {"a1": 10.0, "a2": 10.0}
    assert cfg.n_steps == 20_000 and cfg.replicas == 8 and cfg.workers is None
    assert cfg.output_dir == "out/fig" and len(cfg.ell_grid) == 20
    assert cfg.target().label == "beta(a1=10.0,a2=10.0)"


def test_explicit_grid_list():
    cfg = parse_config(MINIMAL + "ell_grid = [0.5, 1, 2]\n")
    assert cfg.ell_grid == (0.5, 1.0, 2.0)


def test_beta_bound_message():
    errs = errors_of("target = beta\nd_list = 10\n[target]\na1 = 5\na2 = 10\n")
    assert any("a1 must exceed 6" in e for e in errs)


def test_duplicate_key_names_both_lines():
    errs = errors_of("target = gaussian\nd_list = 10\nreplicas = 2\nreplicas = 3\n")
    assert errs == ["duplicate key experiment.replicas on lines 3 and 4"]


def test_syntax_errors_carry_line_numbers():
    errs = errors_of("target = gaussian\nd_list = 10\nthis line is wrong\n[broken\n")
    assert any(e.startswith("line 3:") for e in errs)
    assert any(e.startswith("line 4:") and "section header" in e for e in errs)


def test_unknown_keys_and_sections():
    errs = errors_of(MINIMAL + "colour = red\n[plot]\n")
    assert any("unknown key experiment.colour" in e for e in errs)
    assert any("unknown section [plot]" in e for e in errs)


def test_all_errors_collected():
    errs = errors_of("target = cauchy\nd_list = 0, x\nn_steps = -1\nreplicas = 1.5\n"
                     "ell_grid = 2, 1\n")
    joined = "\n".join(errs)
    for piece in ("experiment.target must be one of", "d_list entries must be >= 1",
                  "d_list entries must be integers", "n_steps must be >= 1",
                  "replicas must be an integer", "strictly ascending"):
        assert piece in joined
    assert len(errs) >= 6


def test_missing_required_keys():
    errs = errors_of("")
    assert "experiment.target is required" in errs and "experiment.d_list is required" in errs


def test_grid_given_twice():
    errs = errors_of(MINIMAL + "ell_grid = 1, 2\n[ell_grid]\ncount = 3\n")
    assert any("not both" in e for e in errs)


def test_hash_ignores_workers_and_paths():
    a = parse_config(MINIMAL + "workers = 3\n[output]\ndir = a\n")
    b = parse_config(MINIMAL + "workers = 1\n[output]\ndir = b\n")
    c = parse_config(MINIMAL + "base_seed = 1\n")
    assert a.config_hash() == b.config_hash() != c.config_hash()
    assert len(a.config_hash()) == 16


def test_load_config_file(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text(MINIMAL, encoding="utf-8")
    assert load_config(str(p)) == parse_config(MINIMAL)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "missing.cfg"))


def test_worker_env(monkeypatch):
    monkeypatch.setenv("RWMLAB_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("RWMLAB_WORKERS", "zero")
    with pytest.raises(ConfigError):
        default_workers()
