"""Deterministic parallel execution of (d, ell, replica) grids and output files.

Each chain draws from its own substream keyed by
``(base_seed, family, d, ell_index, replica)``, so a cell's result does not
depend on which worker ran it or on what else was in its batch. For each
``d`` the unfinished cells are listed in lexicographic order and split into
contiguous chunks, one per worker. The coordinator pools replicas, writes
every finished row to a partial file and finally writes the sorted CSV.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ExperimentConfig, default_workers
from .errors import ConfigError
from .limits import limit_report
from .rwm import CURVE_COLUMNS, CurveRow, _summaries, cell_rng, pool, simulate_chains
from .targets import make_target

PARTIAL_SUFFIX = ".partial"
SEED_SCHEME = "philox(base_seed, family, d, ell_index, replica)"


# --- metadata and formatting ---------------------------------------------

def metadata(config_hash: str, seeds, timestamp: bool = True, **extra) -> dict:
    meta = {"version": __version__, "config_hash": config_hash, "seeds": seeds}
    meta.update(extra)
    if timestamp:
        meta["created"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return meta


def header_lines(meta: dict) -> str:
    """Metadata as ``# key: value`` lines (``created`` last, so it is easy to strip)."""
    keys = [k for k in meta if k != "created"] + (["created"] if "created" in meta else [])
    out = []
    for k in keys:
        v = meta[k]
        out.append(f"# {k}: {v if isinstance(v, str) else json.dumps(v, sort_keys=True)}\n")
    return "".join(out)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def row_line(row: CurveRow) -> str:
    return ",".join(_fmt(getattr(row, c)) for c in CURVE_COLUMNS) + "\n"


def curve_csv(rows, meta: dict) -> str:
    return header_lines(meta) + ",".join(CURVE_COLUMNS) + "\n" + "".join(row_line(r) for r in rows)


def read_curve_csv(text: str) -> tuple[dict, list[CurveRow]]:
    """Inverse of ``curve_csv``; tolerates a truncated last line."""
    meta, body = {}, []
    for line in text.splitlines(keepends=True):
        if line.startswith("# "):
            k, _, v = line[2:].rstrip("\n").partition(": ")
            meta[k] = v
        else:
            body.append(line)
    rows = []
    reader = csv.reader(io.StringIO("".join(body)))
    header = next(reader, None)
    if header is not None and tuple(header) != CURVE_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    types = (str, int, float, float, float, float, float, int, int, int)
    for rec in reader:
        if len(rec) != len(CURVE_COLUMNS):
            break
        try:
            rows.append(CurveRow(*(t(v) for t, v in zip(types, rec))))
        except ValueError:
            break
    return meta, rows


# --- worker ---------------------------------------------------------------

def _chunk_job(family, params, d, ell_grid, cells, n_steps, burn_in, base_seed):
    """Simulate ``cells`` (pairs ``(ell_index, replica)``) of one dimension."""
    target = make_target(family, **params)
    ells = [ell_grid[i] for i, _ in cells]
    rngs = [cell_rng(base_seed, family, d, i, r) for i, r in cells]
    res = simulate_chains(target, d, ells, rngs, n_steps, burn_in)
    return _summaries(target, d, ells, res, n_steps)


def static_chunks(items: list, n: int) -> list[list]:
    """Split ``items`` into at most ``n`` contiguous chunks of near-equal size."""
    n = max(1, min(n, len(items)))
    bounds = [len(items) * k // n for k in range(n + 1)]
    return [items[bounds[k]:bounds[k + 1]] for k in range(n)]


def _check_writable(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {path} cannot be created: {exc.strerror}") from None
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")


def run_grid(cfg: ExperimentConfig, out_csv: str | None = None, workers: int | None = None,
             timestamp: bool = True, progress=None) -> list[CurveRow]:
    """Run the whole grid and return rows ordered by ``(d_list order, ell)``.

    With ``out_csv`` given, finished rows are appended to ``out_csv.partial``
    as they complete; a rerun with the same config resumes from it. The
    final CSV replaces the partial file once every row exists.
    """
    workers = workers or cfg.workers or default_workers()
    target = cfg.target()
    chash = cfg.config_hash()
    meta = metadata(chash, {"base_seed": cfg.base_seed, "scheme": SEED_SCHEME}, timestamp)
    done: dict[tuple[int, int], CurveRow] = {}
    partial = None
    if out_csv is not None:
        _check_writable(os.path.dirname(os.path.abspath(out_csv)))
        partial = out_csv + PARTIAL_SUFFIX
        if os.path.exists(partial):
            with open(partial, encoding="utf-8") as fh:
                old_meta, old_rows = read_curve_csv(fh.read())
            if old_meta.get("config_hash") == chash:
                index = {float(e): i for i, e in enumerate(cfg.ell_grid)}
                for r in old_rows:
                    done[(r.d, index[r.ell])] = r
        with open(partial, "w", encoding="utf-8") as fh:
            fh.write(curve_csv(sorted(done.values(), key=lambda r: (cfg.d_list.index(r.d), r.ell)),
                               meta))

    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for d in cfg.d_list:
            todo = [i for i in range(len(cfg.ell_grid)) if (d, i) not in done]
            cells = [(i, r) for i in todo for r in range(cfg.replicas)]
            if not cells:
                continue
            args = (target.family, cfg.params, d, cfg.ell_grid)
            tail = (cfg.n_steps, cfg.burn_in, cfg.base_seed)
            chunks = static_chunks(cells, workers)
            if executor is None:
                parts = [_chunk_job(*args, ch, *tail) for ch in chunks]
            else:
                parts = list(executor.map(_chunk_job, *zip(*[(*args, ch, *tail) for ch in chunks])))
            by_cell = {c: s for ch, part in zip(chunks, parts) for c, s in zip(ch, part)}
            for i in todo:
                acc, acc_se, esjd, esjd_se = pool([by_cell[(i, r)] for r in range(cfg.replicas)])
                row = CurveRow(target.family, d, float(cfg.ell_grid[i]), acc, acc_se, esjd,
                               esjd_se, cfg.n_steps, cfg.replicas, cfg.base_seed)
                done[(d, i)] = row
                if partial is not None:
                    with open(partial, "a", encoding="utf-8") as fh:
                        fh.write(row_line(row))
                        fh.flush()
                if progress is not None:
                    progress(row)
    finally:
        if executor is not None:
            executor.shutdown()

    rows = [done[(d, i)] for d in cfg.d_list for i in range(len(cfg.ell_grid))]
    if out_csv is not None:
        with open(out_csv, "w", encoding="utf-8") as fh:
            fh.write(curve_csv(rows, meta))
        os.remove(partial)
    return rows


# --- figure reproduction --------------------------------------------------

def smoothed_maximum(rows: list[CurveRow]) -> CurveRow:
    """Row at the maximum of the 3-point moving average of ESJD along ``ell``.

    End points average over their two available neighbours.
    """
    rows = sorted(rows, key=lambda r: r.ell)
    e = [r.esjd for r in rows]
    smooth = [float(np.mean(e[max(0, k - 1):k + 2])) for k in range(len(e))]
    return rows[int(np.argmax(smooth))]


def plot_script(rows: list[CurveRow], d_list, limit_curve, title: str) -> str:
    """Self-contained gnuplot script: ESJD against acceptance rate, one series per d."""
    out = [
        f"# {title}",
        "set terminal pngcairo size 900,600",
        "set output 'figure1.png'",
        "set xlabel 'mean acceptance rate'",
        "set ylabel 'ESJD'",
        "set key top right",
        "set grid",
    ]
    for d in d_list:
        out.append(f"$d{d} << EOD")
        out += [f"{r.acc_rate!r} {r.esjd!r}" for r in sorted(rows, key=lambda r: r.ell) if r.d == d]
        out.append("EOD")
    out.append("$limit << EOD")
    out += [f"{a!r} {h!r}" for _, a, h in limit_curve]
    out.append("EOD")
    series = [f"$d{d} using 1:2 with linespoints title 'd={d}'" for d in d_list]
    series.append("$limit using 1:2 with lines dashtype 2 title 'limit h vs a'")
    out.append("plot " + ", \\\n     ".join(series))
    return "\n".join(out) + "\n"


def run_figure1(cfg: ExperimentConfig, workers: int | None = None, timestamp: bool = True,
                progress=None) -> dict:
    """Write ``curve.csv``, ``curve.json`` and ``plot.gp`` into ``cfg.output_dir``."""
    _check_writable(cfg.output_dir)
    csv_path = os.path.join(cfg.output_dir, "curve.csv")
    rows = run_grid(cfg, csv_path, workers, timestamp, progress)
    target = cfg.target()
    I = target.fisher_info
    lo, hi = min(cfg.ell_grid), max(cfg.ell_grid)
    rep = limit_report(I, np.linspace(lo, hi, 200))
    maxima = []
    for d in cfg.d_list:
        best = smoothed_maximum([r for r in rows if r.d == d])
        maxima.append({"d": d, "ell": best.ell, "acc_rate": best.acc_rate, "esjd": best.esjd})
    meta = metadata(cfg.config_hash(), {"base_seed": cfg.base_seed, "scheme": SEED_SCHEME},
                    timestamp, target=target.label)
    report = {
        "meta": meta,
        "limit": rep.to_dict(),
        "limit_curve": [{"ell": e, "acc": a, "h": h} for e, a, h in rep.curve],
        "smoothed_maxima": maxima,
    }
    json_path = os.path.join(cfg.output_dir, "curve.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    gp_path = os.path.join(cfg.output_dir, "plot.gp")
    with open(gp_path, "w", encoding="utf-8") as fh:
        fh.write(plot_script(rows, cfg.d_list, rep.curve, f"ESJD vs acceptance, {target.label}"))
    return {"csv": csv_path, "json": json_path, "plot": gp_path, "rows": rows,
            "maxima": maxima}


def figure1_recipe(n_steps: int = 20_000, replicas: int = 8, base_seed: int = 0,
                   output_dir: str = "figure1", count: int = 20) -> ExperimentConfig:
    """Shipped recipe: Beta(10, 10), d in {10, 50, 100}.

    The grid spans acceptance rates from about 0.85 down to 0.03 in the
    large-d limit (``ell`` from 0.05 to 0.7 with ``I = 85.5``). Run lengths
    and replica counts are pilot-calibrated.
    """
    grid = tuple(float(v) for v in np.linspace(0.05, 0.7, count))
    return ExperimentConfig("beta", {"a1": 10.0, "a2": 10.0}, (10, 50, 100), grid, n_steps,
                            replicas, base_seed, 0, None, output_dir)


def to_jsonable(obj):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return str(float(obj))
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


__all__ = ["run_grid", "run_figure1", "figure1_recipe", "smoothed_maximum", "curve_csv",
           "read_curve_csv", "metadata", "static_chunks", "plot_script", "to_jsonable"]
