"""JSON sweep configs, CSV outputs and run manifests.

Config schema (JSON object; unknown keys are rejected):

============== ================ ============================ ==========
key            type             range                        default
============== ================ ============================ ==========
alphas         list of float    each >= 0, non-empty         required
betas          list of float    each in [0, 1], non-empty    required
n_items        int              >= 2                         100
T              int              >= 1                         100000
n_runs         int              >= 1                         50
master_seed    int              [0, 2**64)                   0
tie_rank_mode  str              "max_rank" | "min_rank"      "max_rank"
tau_variant    str              "tau_b" | "tau_a"            "tau_b"
trace          object or null   see below                    null
============== ================ ============================ ==========

``trace`` is either ``{"n_points": int, "scale": "log" | "linear"}`` or
``{"times": [int, ...]}`` (strictly increasing, last <= T).
"""

from __future__ import annotations

import csv
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, metrics
from .exceptions import ConfigError, InvalidInputError, NoTraceError
from .experiment import GridResult, SweepConfig, TraceSpec
from .ranking import TIE_RANK_MODES

GRID_COLUMNS = ("alpha", "beta", "n_runs", "mean_q", "stderr_q", "mean_tau", "stderr_tau")
TRACE_COLUMNS = ("alpha", "beta", "t", "mean_q", "stderr_q")

DEFAULTS = {
    "n_items": 100,
    "T": 100_000,
    "n_runs": 50,
    "master_seed": 0,
    "tie_rank_mode": "max_rank",
    "tau_variant": "tau_b",
    "trace": None,
}
REQUIRED = ("alphas", "betas")
KEYS = REQUIRED + tuple(DEFAULTS)
TRACE_KEYS = ("n_points", "scale", "times")


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _real_list(key, value, lo, hi):
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a non-empty list of numbers", key)
    for v in value:
        if not _is_real(v):
            raise ConfigError(f"{key}: {v!r} is not a number", key)
        if not lo <= v <= hi:
            raise ConfigError(f"{key}: value {v} out of range [{lo}, {hi}]", key)
    return tuple(float(v) for v in value)


def _int_field(key, value, lo, hi=None):
    if not _is_int(value):
        raise ConfigError(f"{key}: expected an integer, got {value!r}", key)
    if value < lo or (hi is not None and value > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise ConfigError(f"{key}: value {value} out of range {bound}", key)
    return value


def _trace_field(value, T):
    if value is None:
        return None
    if not isinstance(value, dict):
        raise ConfigError("trace: expected an object or null", "trace")
    unknown = sorted(set(value) - set(TRACE_KEYS))
    if unknown:
        raise ConfigError(f"trace: unknown key(s) {', '.join(unknown)}", "trace." + unknown[0])
    if "times" in value:
        times = value["times"]
        if not isinstance(times, list) or not times or not all(_is_int(t) for t in times):
            raise ConfigError("trace.times: expected a non-empty list of integers", "trace.times")
        if set(value) - {"times"}:
            raise ConfigError("trace: give either times or n_points/scale, not both", "trace")
        spec = TraceSpec(times=tuple(times))
    else:
        n_points = _int_field("trace.n_points", value.get("n_points", 20), 1, T)
        scale = value.get("scale", "log")
        if scale not in ("log", "linear"):
            raise ConfigError(f"trace.scale: expected 'log' or 'linear', got {scale!r}", "trace.scale")
        spec = TraceSpec(n_points=n_points, scale=scale)
    try:
        spec.schedule(T)
    except InvalidInputError as exc:
        raise ConfigError(f"trace: {exc}", "trace") from exc
    return spec


def config_from_dict(raw: dict) -> SweepConfig:
    """Validate a config mapping and apply defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", unknown[0])
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"{key}: required key missing", key)
    merged = {**DEFAULTS, **raw}

    alphas = _real_list("alphas", merged["alphas"], 0.0, math.inf)
    betas = _real_list("betas", merged["betas"], 0.0, 1.0)
    n_items = _int_field("n_items", merged["n_items"], 2)
    T = _int_field("T", merged["T"], 1)
    n_runs = _int_field("n_runs", merged["n_runs"], 1)
    master_seed = _int_field("master_seed", merged["master_seed"], 0, 2**64 - 1)
    if merged["tie_rank_mode"] not in TIE_RANK_MODES:
        raise ConfigError(
            f"tie_rank_mode: expected one of {TIE_RANK_MODES}, got {merged['tie_rank_mode']!r}",
            "tie_rank_mode",
        )
    if merged["tau_variant"] not in metrics.TAU_VARIANTS:
        raise ConfigError(
            f"tau_variant: expected one of {metrics.TAU_VARIANTS}, got {merged['tau_variant']!r}",
            "tau_variant",
        )
    trace = _trace_field(merged["trace"], T)
    return SweepConfig(
        alphas=alphas,
        betas=betas,
        n_items=n_items,
        T=T,
        n_runs=n_runs,
        master_seed=master_seed,
        tie_rank_mode=merged["tie_rank_mode"],
        tau_variant=merged["tau_variant"],
        trace=trace,
    )


def config_to_dict(config: SweepConfig) -> dict:
    """Plain-JSON form of ``config``; ``config_from_dict`` inverts it."""
    trace = None
    if config.trace is not None:
        if config.trace.times is not None:
            trace = {"times": list(config.trace.times)}
        else:
            trace = {"n_points": config.trace.n_points, "scale": config.trace.scale}
    return {
        "alphas": list(config.alphas),
        "betas": list(config.betas),
        "n_items": config.n_items,
        "T": config.T,
        "n_runs": config.n_runs,
        "master_seed": config.master_seed,
        "tie_rank_mode": config.tie_rank_mode,
        "tau_variant": config.tau_variant,
        "trace": trace,
    }


def parse_override(text: str):
    """Split ``key=value``; the value is JSON, or a bare string if it isn't."""
    key, sep, value = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def parse_config(path=None, overrides=()) -> SweepConfig:
    """Load a JSON config file (optional) and apply ``key=value`` overrides."""
    raw = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        head, dot, sub = key.partition(".")
        if dot and head == "trace":
            # trace.n_points=10 edits one field of the trace object
            trace = raw.get("trace")
            raw["trace"] = {**(trace if isinstance(trace, dict) else {}), sub: value}
        else:
            raw[key] = value
    return config_from_dict(raw)


def dump_config(config: SweepConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")


def _fmt(x) -> str:
    return f"{x:.6g}"


def write_grid_csv(grid: GridResult, path) -> None:
    """One row per cell, sorted by (alpha, beta), 6 significant digits."""
    na, nb = grid.config.shape
    if len(grid.cells) != na * nb:
        raise InvalidInputError("grid is incomplete")
    rows = sorted(grid.cells.values(), key=lambda c: (c.alpha, c.beta))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for c in rows:
            w.writerow([
                _fmt(c.alpha), _fmt(c.beta), c.n_runs, _fmt(c.mean_q),
                _fmt(c.stderr_q), _fmt(c.mean_tau), _fmt(c.stderr_tau),
            ])


def write_trace_csv(grid: GridResult, path) -> None:
    """Per-cell average-quality traces, sorted by (alpha, beta, t)."""
    if not grid.has_traces:
        raise NoTraceError("tracing was not enabled for this sweep; set 'trace' in the config")
    rows = []
    for c in grid.cells.values():
        tr = c.trace
        for t, m, s in zip(tr.times, tr.mean_q, tr.stderr_q):
            rows.append((c.alpha, c.beta, t, m, s))
    rows.sort(key=lambda r: r[:3])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for a, b, t, m, s in rows:
            w.writerow([_fmt(a), _fmt(b), t, _fmt(m), _fmt(s)])


def read_csv(path):
    """Rows of a grid or trace CSV as dicts of floats."""
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def write_manifest(path, config: SweepConfig, started: datetime, finished: datetime, outputs) -> dict:
    manifest = {
        "version": __version__,
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "master_seed": config.master_seed,
        "config": config_to_dict(config),
        "outputs": [os.fspath(p) for p in outputs],
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def utcnow() -> datetime:
    return datetime.now(timezone.utc)
