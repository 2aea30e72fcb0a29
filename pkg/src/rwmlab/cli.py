"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numeric failure (partial
output is kept on disk).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ExperimentConfig, default_workers, load_config
from .errors import ConfigError, QuadratureError
from .limits import limit_report
from .runner import curve_csv, figure1_recipe, metadata, run_figure1, run_grid, to_jsonable
from .targets import TargetError, make_target

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    pass


def _target_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("target")
    g.add_argument("--target", default="gaussian",
                   choices=["gaussian", "lasso", "gengamma", "beta"], help="target family")
    g.add_argument("--mean", type=float, default=None, help="gaussian mean (family default 0)")
    g.add_argument("--variance", type=float, default=None,
                   help="gaussian variance (family default 1)")
    g.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="lasso penalty (family default 1)")
    g.add_argument("--smooth", choices=["zero", "quadratic"], default=None,
                   help="lasso smooth part (family default zero)")
    g.add_argument("--coef", type=float, default=None, help="lasso quadratic coefficient")
    g.add_argument("--a1", type=float, default=None,
                   help="gengamma/beta first shape (family defaults 7 / 10)")
    g.add_argument("--a2", type=float, default=None,
                   help="gengamma/beta second shape (family defaults 1 / 10)")
    g.add_argument("--r", type=float, default=None, help="interval split parameter (default 1.5)")


_PARAM_FLAGS = {"mean": "mean", "variance": "variance", "lam": "lambda", "smooth": "smooth",
                "coef": "coef", "a1": "a1", "a2": "a2", "r": "r"}


def _target_params(ns) -> dict:
    return {name: getattr(ns, attr) for attr, name in _PARAM_FLAGS.items()
            if getattr(ns, attr) is not None}


def _build_target(ns):
    return make_target(ns.target, **_target_params(ns))


def _args_hash(ns, skip=("out", "no_timestamp", "workers", "func", "raw_csv")) -> str:
    items = {k: v for k, v in vars(ns).items() if k not in skip}
    blob = json.dumps(items, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _emit_json(obj: dict, out: str | None, name: str) -> None:
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_csv(path: str, meta: dict, header, rows) -> None:
    from .runner import header_lines
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header_lines(meta))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


# --- subcommands ----------------------------------------------------------

def cmd_limits(ns) -> int:
    target = _build_target(ns)
    I = ns.fisher_info if ns.fisher_info is not None else target.fisher_info
    rep = limit_report(I) if ns.ell_count is None else limit_report(
        I, np.linspace(ns.ell_max / ns.ell_count, ns.ell_max, ns.ell_count))
    meta = metadata(_args_hash(ns), None, not ns.no_timestamp, target=target.label)
    _emit_json({"meta": meta, **rep.to_dict()}, ns.out, "limits.json")
    if ns.out:
        _write_csv(os.path.join(ns.out, "limits.csv"), meta, ("ell", "acc", "h"), rep.curve)
    return EXIT_OK


def _grid_config(ns) -> ExperimentConfig:
    if ns.config:
        cfg = load_config(ns.config)
        return cfg
    target = _build_target(ns)
    if ns.ell:
        grid = tuple(sorted(ns.ell))
    else:
        from .limits import optimal_scaling
        star = optimal_scaling(target.fisher_info)[0]
        start = ns.ell_start if ns.ell_start is not None else 0.1 * star
        stop = ns.ell_stop if ns.ell_stop is not None else 3.0 * star
        grid = tuple(float(v) for v in np.linspace(start, stop, ns.ell_count))
    errors = []
    if any(e <= 0 for e in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        errors.append("ell grid must be positive and strictly ascending")
    if any(d < 1 for d in ns.d):
        errors.append("every --d must be >= 1")
    if ns.n_steps < 1 or ns.replicas < 1:
        errors.append("--n-steps and --replicas must be >= 1")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(target.family, _target_params(ns), tuple(ns.d), grid, ns.n_steps,
                            ns.replicas, ns.seed, 0, None, ns.out or ".")


def cmd_esjd(ns) -> int:
    cfg = _grid_config(ns)
    workers = ns.workers or cfg.workers or default_workers()
    out_csv = os.path.join(ns.out, "curve.csv") if ns.out else None
    rows = run_grid(cfg, out_csv, workers, not ns.no_timestamp)
    meta = metadata(cfg.config_hash(), {"base_seed": cfg.base_seed}, not ns.no_timestamp)
    if out_csv is None:
        sys.stdout.write(curve_csv(rows, meta))
    else:
        sys.stdout.write(f"wrote {out_csv}\n")
    return EXIT_OK


def cmd_figure1(ns) -> int:
    if ns.config:
        cfg = load_config(ns.config)
    else:
        cfg = figure1_recipe(ns.n_steps, ns.replicas, ns.seed, ns.out)
    res = run_figure1(cfg, ns.workers, not ns.no_timestamp)
    for m in res["maxima"]:
        sys.stdout.write(f"d={m['d']}: smoothed ESJD maximum at acceptance {m['acc_rate']:.3f} "
                         f"(ell={m['ell']:.4f})\n")
    sys.stdout.write(f"wrote {res['csv']}, {res['json']}, {res['plot']}\n")
    return EXIT_OK


def cmd_verify(ns) -> int:
    from .verify import DEFAULT_THETA_GRID, verify_target
    target = _build_target(ns)
    rep = verify_target(target, ns.p, DEFAULT_THETA_GRID, ns.ell, tuple(ns.zeta_d),
                        ns.zeta_samples, ns.seed)
    meta = metadata(_args_hash(ns), {"zeta": ns.seed}, not ns.no_timestamp)
    _emit_json({"meta": meta, **rep.to_dict()}, ns.out, "verify.json")
    if ns.out:
        dqm = dict(rep.dqm_remainders)
        _write_csv(os.path.join(ns.out, "remainders.csv"), meta, ("theta", "lp_remainder", "dqm"),
                   [(t, v, dqm[t]) for t, v in rep.lp_remainders])
    return EXIT_OK


def cmd_compare(ns) -> int:
    from .diffusion import bootstrap_ks_se, compare_chain_to_diffusion, ks_critical
    target = _build_target(ns)
    cmp = compare_chain_to_diffusion(target, ns.ell, ns.d, ns.t, ns.replicas, ns.seed, ns.dt,
                                     ns.quantity)
    meta = metadata(_args_hash(ns), cmp.seeds, not ns.no_timestamp)
    out = {"meta": meta, **cmp.to_dict(),
           "ks_critical_1pct": ks_critical(cmp.n_chain, cmp.n_diffusion)}
    if ns.bootstrap:
        out["ks_se"] = bootstrap_ks_se(cmp.chain_sample, cmp.diffusion_sample, ns.bootstrap, ns.seed)
    _emit_json(out, ns.out, "compare.json")
    if ns.out and ns.raw_csv:
        _write_csv(os.path.join(ns.out, "chain_sample.csv"), meta, ("y",),
                   [(v,) for v in cmp.chain_sample])
        _write_csv(os.path.join(ns.out, "diffusion_sample.csv"), meta, ("y",),
                   [(v,) for v in cmp.diffusion_sample])
    return EXIT_OK


def cmd_diffusion(ns) -> int:
    from .diffusion import SdeConfig, euler_maruyama_paths
    target = _build_target(ns)
    cfg = SdeConfig(dt=ns.dt, t_end=ns.t_end, n_paths=ns.paths, seed=ns.seed)
    s = euler_maruyama_paths(target, ns.ell, cfg)
    meta = metadata(_args_hash(ns), {"sde": ns.seed}, not ns.no_timestamp)
    n = s.terminal.size
    out = {"meta": meta, "n_paths": n, "n_steps": s.n_steps,
           "terminal_mean": float(s.terminal.mean()),
           "terminal_mean_se": float(s.terminal.std(ddof=1) / np.sqrt(n)) if n > 1 else None,
           "terminal_var": float(s.terminal.var(ddof=1)) if n > 1 else None,
           "rejection_fraction": s.rejection_fraction, "rejection_warning": s.warning}
    _emit_json(out, ns.out, "diffusion.json")
    if ns.out and ns.raw_csv:
        _write_csv(os.path.join(ns.out, "paths.csv"), meta, ("y0", "y_t"),
                   zip(s.initial, s.terminal))
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwmlab", formatter_class=_Formatter,
                                description="Random Walk Metropolis scaling experiments")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="directory for output files"):
        sp.add_argument("--out", default=None, help=out_help)
        sp.add_argument("--no-timestamp", action="store_true",
                        help="omit the creation time from metadata headers")

    sp = sub.add_parser("limits", formatter_class=_Formatter,
                        help="limiting acceptance rate, speed and optimal scale")
    _target_args(sp)
    sp.add_argument("--fisher-info", type=float, default=None,
                    help="override the target's Fisher information")
    sp.add_argument("--ell-count", type=int, default=None,
                    help="points in the exported curve (default: 200 on (0, 3 ell*])")
    sp.add_argument("--ell-max", type=float, default=5.0, help="upper end with --ell-count")
    common(sp)
    sp.set_defaults(func=cmd_limits)

    sp = sub.add_parser("esjd", formatter_class=_Formatter,
                        help="acceptance rate and ESJD along an ell grid")
    _target_args(sp)
    sp.add_argument("--config", default=None, help="experiment config file (overrides flags)")
    sp.add_argument("--d", type=int, action="extend", nargs="+", default=None,
                    help="dimension(s); default 10")
    sp.add_argument("--ell", type=float, action="extend", nargs="+", default=None,
                    help="explicit ell values")
    sp.add_argument("--ell-start", type=float, default=None, help="grid start (default 0.1 ell*)")
    sp.add_argument("--ell-stop", type=float, default=None, help="grid stop (default 3 ell*)")
    sp.add_argument("--ell-count", type=int, default=20, help="grid points")
    sp.add_argument("--n-steps", type=int, default=100_000, help="steps per chain")
    sp.add_argument("--replicas", type=int, default=4, help="independent chains per cell")
    sp.add_argument("--seed", type=int, default=0, help="base seed")
    sp.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: $RWMLAB_WORKERS or CPU count)")
    common(sp)
    sp.set_defaults(func=cmd_esjd)

    sp = sub.add_parser("figure1", formatter_class=_Formatter,
                        help="ESJD vs acceptance curves for Beta(10,10), d = 10, 50, 100")
    sp.add_argument("--config", default=None, help="experiment config file (overrides flags)")
    sp.add_argument("--n-steps", type=int, default=20_000, help="steps per chain")
    sp.add_argument("--replicas", type=int, default=8, help="independent chains per cell")
    sp.add_argument("--seed", type=int, default=0, help="base seed")
    sp.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: $RWMLAB_WORKERS or CPU count)")
    sp.add_argument("--out", default="figure1", help="output directory")
    sp.add_argument("--no-timestamp", action="store_true",
                    help="omit the creation time from metadata headers")
    sp.set_defaults(func=cmd_figure1)

    sp = sub.add_parser("verify", formatter_class=_Formatter,
                        help="numerical checks of the smoothness and boundary conditions")
    _target_args(sp)
    sp.add_argument("--p", type=float, default=5.0, help="L^p exponent (> 4)")
    sp.add_argument("--ell", type=float, default=2.0, help="scale for the zeta-limit check")
    sp.add_argument("--zeta-d", type=float, nargs="+", default=[1e2, 1e4, 1e6],
                    help="dimensions for the zeta-limit check")
    sp.add_argument("--zeta-samples", type=int, default=300,
                    help="Z draws for the conditional zeta estimator")
    sp.add_argument("--seed", type=int, default=0, help="seed")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("compare", formatter_class=_Formatter,
                        help="KS distance between chain and diffusion marginals")
    _target_args(sp)
    sp.add_argument("--ell", type=float, default=2.38, help="proposal scale")
    sp.add_argument("--d", type=int, default=100, help="dimension")
    sp.add_argument("--t", type=float, default=1.0, help="diffusion time")
    sp.add_argument("--replicas", type=int, default=2000, help="chain replicas and SDE paths")
    sp.add_argument("--dt", type=float, default=1e-3, help="Euler-Maruyama step")
    sp.add_argument("--quantity", choices=["marginal", "increment"], default="marginal",
                    help="compare Y_t or Y_t - Y_0")
    sp.add_argument("--bootstrap", type=int, default=0,
                    help="bootstrap resamples for the KS standard error (0 = skip)")
    sp.add_argument("--seed", type=int, default=0, help="seed (diffusion uses seed + 1)")
    sp.add_argument("--raw-csv", action="store_true", help="also write the raw samples")
    common(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("diffusion", formatter_class=_Formatter,
                        help="Euler-Maruyama paths of the limiting diffusion")
    _target_args(sp)
    sp.add_argument("--ell", type=float, default=2.38, help="proposal scale")
    sp.add_argument("--dt", type=float, default=1e-3, help="time step")
    sp.add_argument("--t-end", type=float, default=1.0, help="horizon")
    sp.add_argument("--paths", type=int, default=10_000, help="number of paths")
    sp.add_argument("--seed", type=int, default=0, help="seed")
    sp.add_argument("--raw-csv", action="store_true", help="also write initial/terminal values")
    common(sp)
    sp.set_defaults(func=cmd_diffusion)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if getattr(ns, "d", None) is None and ns.command == "esjd":
        ns.d = [10]
    try:
        return ns.func(ns)
    except (ConfigError, TargetError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except (QuadratureError, ArithmeticError, FloatingPointError) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
