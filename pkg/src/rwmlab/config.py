"""Line-oriented experiment configuration.

Format::

    # comment
    target = beta
    d_list = 10, 50, 100
    n_steps = 20000
    replicas = 8
    base_seed = 0
    workers = auto

    [target]
    a1 = 10
    a2 = 10

    [ell_grid]
    start = 0.05
    stop = 0.7
    count = 20

    [output]
    dir = out/figure1

Top-level keys may also sit under an ``[experiment]`` header. ``ell_grid``
can instead be an explicit list at top level (``ell_grid = 0.5, 1, 2``).
Lists accept optional square brackets. Every problem found is reported,
each with its line number or key path.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .limits import optimal_scaling
from .targets import FAMILIES, TargetError, make_target

DEFAULT_N_STEPS = 100_000
DEFAULT_REPLICAS = 4
DEFAULT_GRID_COUNT = 20
WORKERS_ENV = "RWMLAB_WORKERS"

_EXPERIMENT_KEYS = {"target", "d_list", "ell_grid", "n_steps", "replicas", "base_seed",
                    "workers", "burn_in"}
_SECTION_KEYS = {
    "experiment": _EXPERIMENT_KEYS,
    "target": {"mean", "variance", "lambda", "smooth", "coef", "a1", "a2", "r"},
    "ell_grid": {"start", "stop", "count"},
    "output": {"dir"},
}
_STRING_PARAMS = {"smooth"}


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    params: dict
    d_list: tuple[int, ...]
    ell_grid: tuple[float, ...]
    n_steps: int = DEFAULT_N_STEPS
    replicas: int = DEFAULT_REPLICAS
    base_seed: int = 0
    burn_in: int = 0
    workers: int | None = None
    output_dir: str = "."

    def target(self):
        return make_target(self.family, **self.params)

    def content(self) -> dict:
        """Fields that determine the numeric output (not workers or paths)."""
        out = asdict(self)
        out.pop("workers")
        out.pop("output_dir")
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.content(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def default_workers() -> int:
    """Worker count from ``RWMLAB_WORKERS``, else the CPU count."""
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if raw and raw != "auto":
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be a positive integer or 'auto'") from None
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be a positive integer or 'auto'")
        return n
    return os.cpu_count() or 1


def _split_list(raw: str) -> list[str]:
    raw = raw.strip()
    if raw.startswith("[") and raw.endswith("]"):
        raw = raw[1:-1]
    return [p.strip() for p in raw.split(",") if p.strip()]


def _lex(text: str, errors: list[str]) -> dict[tuple[str, str], tuple[str, int]]:
    entries: dict[tuple[str, str], tuple[str, int]] = {}
    section = "experiment"
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]") or len(s) < 3:
                errors.append(f"line {lineno}: malformed section header {s!r}")
                continue
            section = s[1:-1].strip()
            if section not in _SECTION_KEYS:
                errors.append(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in s:
            errors.append(f"line {lineno}: expected 'key = value', got {s!r}")
            continue
        key, value = (p.strip() for p in s.split("=", 1))
        if not key:
            errors.append(f"line {lineno}: missing key")
            continue
        if section in _SECTION_KEYS and key not in _SECTION_KEYS[section]:
            errors.append(f"line {lineno}: unknown key {section}.{key}")
            continue
        if (section, key) in entries:
            first = entries[(section, key)][1]
            errors.append(f"duplicate key {section}.{key} on lines {first} and {lineno}")
            continue
        entries[(section, key)] = (value, lineno)
    return entries


def _as_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        f = float(raw)  # accept 1e5 and 20000.0
        if not f.is_integer():
            raise
        return int(f)


def _num(entries, section, key, kind, errors, default=None, minimum=None):
    if (section, key) not in entries:
        return default
    raw, lineno = entries[(section, key)]
    try:
        val = _as_int(raw) if kind is int else kind(raw)
    except (ValueError, OverflowError):
        name = "an integer" if kind is int else "a number"
        errors.append(f"line {lineno}: {section}.{key} must be {name}, got {raw!r}")
        return default
    if kind is float and not np.isfinite(val):
        errors.append(f"line {lineno}: {section}.{key} must be finite")
        return default
    if minimum is not None and val < minimum:
        errors.append(f"line {lineno}: {section}.{key} must be >= {minimum}")
        return default
    return val


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config; raises ``ConfigError`` listing every problem."""
    errors: list[str] = []
    e = _lex(text, errors)
    X = "experiment"

    family = e.get((X, "target"), (None, 0))[0]
    if family is None:
        errors.append("experiment.target is required")
    elif family not in FAMILIES:
        errors.append(f"line {e[(X, 'target')][1]}: experiment.target must be one of "
                      f"{sorted(FAMILIES)}, got {family!r}")
        family = None

    params = {}
    for (sec, key), (raw, lineno) in e.items():
        if sec != "target":
            continue
        if key in _STRING_PARAMS:
            params[key] = raw
        else:
            val = _num(e, "target", key, float, errors)
            if val is not None:
                params[key] = val
    target = None
    if family is not None:
        try:
            target = make_target(family, **params)
        except TargetError as exc:
            errors.append(f"target: {exc}")

    d_list: list[int] = []
    if (X, "d_list") not in e:
        errors.append("experiment.d_list is required")
    else:
        raw, lineno = e[(X, "d_list")]
        for item in _split_list(raw):
            try:
                d = _as_int(item)
            except (ValueError, OverflowError):
                errors.append(f"line {lineno}: experiment.d_list entries must be integers, got {item!r}")
                continue
            if d < 1:
                errors.append(f"line {lineno}: experiment.d_list entries must be >= 1")
            d_list.append(d)
        if not d_list:
            errors.append(f"line {lineno}: experiment.d_list must be nonempty")
        elif len(set(d_list)) != len(d_list):
            errors.append(f"line {lineno}: experiment.d_list has repeated dimensions")

    n_steps = _num(e, X, "n_steps", int, errors, DEFAULT_N_STEPS, 1)
    replicas = _num(e, X, "replicas", int, errors, DEFAULT_REPLICAS, 1)
    base_seed = _num(e, X, "base_seed", int, errors, 0, 0)
    burn_in = _num(e, X, "burn_in", int, errors, 0, 0)

    workers = None
    if (X, "workers") in e and e[(X, "workers")][0] != "auto":
        workers = _num(e, X, "workers", int, errors, None, 1)

    ell_grid = _ell_grid(e, target, errors)
    out_dir = e.get(("output", "dir"), (".", 0))[0]

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(family, params, tuple(d_list), ell_grid, n_steps, replicas,
                            base_seed, burn_in, workers, out_dir)


def _ell_grid(e, target, errors) -> tuple[float, ...]:
    sec_keys = [k for (s, k) in e if s == "ell_grid"]
    if ("experiment", "ell_grid") in e:
        raw, lineno = e[("experiment", "ell_grid")]
        if sec_keys:
            errors.append(f"line {lineno}: give ell_grid either as a list or as an [ell_grid] "
                          "section, not both")
        vals = []
        for item in _split_list(raw):
            try:
                vals.append(float(item))
            except ValueError:
                errors.append(f"line {lineno}: experiment.ell_grid entries must be numbers, got {item!r}")
        grid = vals
        where = f"line {lineno}: experiment.ell_grid"
    else:
        count = _num(e, "ell_grid", "count", int, errors, DEFAULT_GRID_COUNT, 1)
        start = _num(e, "ell_grid", "start", float, errors)
        stop = _num(e, "ell_grid", "stop", float, errors)
        if start is None or stop is None:
            # unset ends default to (0.1, 3) x the speed-maximising scale
            if target is None:
                return ()
            ell_star = optimal_scaling(target.fisher_info)[0]
            start = 0.1 * ell_star if start is None else start
            stop = 3.0 * ell_star if stop is None else stop
        grid = [float(v) for v in np.linspace(start, stop, count)] if count else []
        where = "ell_grid"
    if not grid:
        errors.append(f"{where} must be nonempty")
    elif any(not np.isfinite(v) or v <= 0 for v in grid):
        errors.append(f"{where} entries must be positive and finite")
    elif any(b <= a for a, b in zip(grid, grid[1:])):
        errors.append(f"{where} must be strictly ascending")
    return tuple(grid)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"config {path} is not valid UTF-8") from None
    return parse_config(text)
