"""Command-line entry point: ``popmarket {simulate,sweep,trace,validate}``.

Exit codes: 0 success, 1 usage error, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import io
from .exceptions import ConfigError, PopMarketError
from .experiment import TraceSpec, argmax_beta, run_grid, run_realizations
from .metrics import summarize_runs

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON sweep config")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--workers", type=int, help="worker threads (env POPMARKET_WORKERS)")
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a config key; VALUE is parsed as JSON (repeatable)",
    )

    parser = _Parser(prog="popmarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("simulate", parents=[common], help="run the first (alpha, beta) cell")
    p.add_argument("--top-k", type=int, default=5, help="most popular items to list")
    sub.add_parser("sweep", parents=[common], help="run the grid, write grid.csv + manifest")
    sub.add_parser("trace", parents=[common], help="run the grid with tracing, write trace.csv")
    sub.add_parser("validate", parents=[common], help="print the resolved config")
    return parser


def _workers(args) -> int:
    if args.workers is not None:
        n = args.workers
    else:
        env = os.environ.get("POPMARKET_WORKERS")
        if env is None:
            return 1
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"POPMARKET_WORKERS must be an integer, got {env!r}")
    if n < 1:
        raise UsageError("--workers must be >= 1")
    return n


def _load(args):
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(("master_seed", args.seed))
    return io.parse_config(args.config, overrides)


def _simulate(args, config, out):
    runs = run_realizations(config, 0, 0)
    cell = summarize_runs(runs, config.alphas[0], config.betas[0])
    out.write(
        f"alpha={cell.alpha:g} beta={cell.beta:g} N={config.n_items} T={config.T} "
        f"runs={cell.n_runs}\n"
    )
    out.write(f"average quality  {cell.mean_q:.4f} +/- {cell.stderr_q:.4f}\n")
    out.write(f"kendall {config.tau_variant}    {cell.mean_tau:.4f} +/- {cell.stderr_tau:.4f}\n")
    out.write(f"top {args.top_k} items of run 0 (item, popularity, quality):\n")
    for item, pop, q in runs[0].top_items(args.top_k):
        out.write(f"  {item:5d} {pop:9d} {q:.4f}\n")


def _sweep(args, config, out, traced):
    if traced and config.trace is None:
        config = dataclasses.replace(config, trace=TraceSpec())
    started = io.utcnow()
    grid = run_grid(config, workers=_workers(args))
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = [args.out / "grid.csv"]
    io.write_grid_csv(grid, outputs[0])
    if traced:
        outputs.append(args.out / "trace.csv")
        io.write_trace_csv(grid, outputs[1])
    manifest = args.out / "manifest.json"
    io.write_manifest(manifest, config, started, io.utcnow(), outputs)
    for i, alpha in enumerate(config.alphas):
        beta_hat, q = argmax_beta(grid, i)
        out.write(f"alpha={alpha:g}: beta_hat={beta_hat:g} (mean q {q:.4f})\n")
    for p in outputs + [manifest]:
        out.write(f"wrote {p}\n")


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    err = sys.stderr
    try:
        args = build_parser().parse_args(argv)
        config = _load(args)
        if args.command == "validate":
            out.write(json.dumps(io.config_to_dict(config), indent=2) + "\n")
        elif args.command == "simulate":
            _simulate(args, config, out)
        else:
            _sweep(args, config, out, traced=args.command == "trace")
    except UsageError as exc:
        err.write(f"popmarket: usage error: {exc}\n")
        return EXIT_USAGE
    except ConfigError as exc:
        err.write(f"popmarket: config error: {exc}\n")
        return EXIT_CONFIG
    except (PopMarketError, OSError) as exc:
        err.write(f"popmarket: error: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
