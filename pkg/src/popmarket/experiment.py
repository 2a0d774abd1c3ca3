"""Replicated (alpha, beta) sweeps with order-independent seeding."""

from __future__ import annotations

import logging
import math
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from . import metrics
from .exceptions import InvalidInputError, SweepError
from .market import ModelParams, RealizationResult, run_realization
from .ranking import MAX_RANK, TIE_RANK_MODES

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, alpha_index: int, beta_index: int, run_index: int) -> int:
    """64-bit seed for one realization.

    Each input is folded in with a SplitMix64 round,
    ``h = splitmix64(h ^ v)``, starting from ``h = splitmix64(master_seed)``.
    SplitMix64 is a bijection on 64-bit words, so for fixed master seed and
    cell the seed is injective in the run index.
    """
    h = _splitmix64(int(master_seed) & _MASK64)
    for v in (alpha_index, beta_index, run_index):
        if v < 0:
            raise InvalidInputError("seed indices must be non-negative")
        h = _splitmix64(h ^ (int(v) & _MASK64))
    return h


@dataclass(frozen=True)
class TraceSpec:
    """How to build a trace schedule for a sweep.

    Either ``times`` (explicit) or ``n_points`` + ``scale``.
    """

    n_points: int = 20
    scale: str = "log"
    times: Optional[Tuple[int, ...]] = None

    def schedule(self, T: int) -> metrics.TraceSchedule:
        if self.times is not None:
            sched = metrics.TraceSchedule(tuple(self.times), "explicit")
            sched.check_horizon(T)
            return sched
        return metrics.trace_schedule(T, self.n_points, self.scale)


@dataclass(frozen=True)
class SweepConfig:
    alphas: Tuple[float, ...]
    betas: Tuple[float, ...]
    n_items: int = 100
    T: int = 100_000
    n_runs: int = 50
    master_seed: int = 0
    tie_rank_mode: str = MAX_RANK
    tau_variant: str = metrics.TAU_B
    trace: Optional[TraceSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not self.alphas or not self.betas:
            raise InvalidInputError("alphas and betas must be non-empty")
        if any(not (math.isfinite(a) and a >= 0) for a in self.alphas):
            raise InvalidInputError("alphas must be >= 0")
        if any(not 0 <= b <= 1 for b in self.betas):
            raise InvalidInputError("betas must lie in [0, 1]")
        if self.n_items < 2 or self.T < 1 or self.n_runs < 1:
            raise InvalidInputError("need n_items >= 2, T >= 1, n_runs >= 1")
        if not 0 <= self.master_seed <= _MASK64:
            raise InvalidInputError("master_seed must be an unsigned 64-bit integer")
        if self.tie_rank_mode not in TIE_RANK_MODES:
            raise InvalidInputError(f"unknown tie_rank_mode {self.tie_rank_mode!r}")
        if self.tau_variant not in metrics.TAU_VARIANTS:
            raise InvalidInputError(f"unknown tau_variant {self.tau_variant!r}")
        if self.trace is not None:
            self.trace.schedule(self.T)

    @property
    def shape(self):
        return len(self.alphas), len(self.betas)

    def params(self, alpha_index: int, beta_index: int) -> ModelParams:
        return ModelParams(
            alpha=self.alphas[alpha_index],
            beta=self.betas[beta_index],
            n_items=self.n_items,
            tie_rank_mode=self.tie_rank_mode,
        )

    def schedule(self) -> Optional[metrics.TraceSchedule]:
        return None if self.trace is None else self.trace.schedule(self.T)


@dataclass(frozen=True)
class GridResult:
    config: SweepConfig
    cells: Dict[Tuple[int, int], metrics.CellSummary] = field(default_factory=dict)

    def cell(self, alpha_index: int, beta_index: int) -> metrics.CellSummary:
        return self.cells[alpha_index, beta_index]

    def table(self, attr: str = "mean_q") -> np.ndarray:
        """``(n_alpha, n_beta)`` array of one summary field, e.g. for a heatmap."""
        out = np.empty(self.config.shape)
        for (i, j), c in self.cells.items():
            out[i, j] = getattr(c, attr)
        return out

    @property
    def has_traces(self) -> bool:
        return bool(self.cells) and all(c.trace is not None for c in self.cells.values())


def _check_indices(config, alpha_index, beta_index):
    na, nb = config.shape
    if not (0 <= alpha_index < na and 0 <= beta_index < nb):
        raise InvalidInputError(
            f"cell ({alpha_index}, {beta_index}) outside grid of shape {config.shape}"
        )


def run_realizations(config: SweepConfig, alpha_index: int, beta_index: int) -> list:
    """All ``n_runs`` realizations of one cell, in run order."""
    _check_indices(config, alpha_index, beta_index)
    params = config.params(alpha_index, beta_index)
    schedule = config.schedule()
    return [
        run_realization(
            params,
            config.T,
            schedule,
            seed=derive_seed(config.master_seed, alpha_index, beta_index, r),
            tau_variant=config.tau_variant,
        )
        for r in range(config.n_runs)
    ]


def run_cell(config: SweepConfig, alpha_index: int, beta_index: int) -> metrics.CellSummary:
    """Summary over ``n_runs`` independent realizations of one grid cell.

    Quality vectors are redrawn for every run.  The summary carries the
    trace aggregate when the config enables tracing.
    """
    runs = run_realizations(config, alpha_index, beta_index)
    return metrics.summarize_runs(runs, config.alphas[alpha_index], config.betas[beta_index])


def run_grid(config: SweepConfig, workers: int = 1) -> GridResult:
    """Every cell of the grid.

    Cells run on up to ``workers`` threads (the simulation loop releases
    the GIL).  Seeds depend only on cell and run indices, so the result is
    identical for any worker count.  The first failing cell aborts the
    sweep with a :class:`SweepError`.
    """
    keys = [(i, j) for i in range(len(config.alphas)) for j in range(len(config.betas))]
    cells: Dict[Tuple[int, int], metrics.CellSummary] = {}

    if workers <= 1:
        for key in keys:
            try:
                cells[key] = run_cell(config, *key)
            except Exception as exc:
                raise SweepError(
                    f"cell {key} failed after {len(cells)} completed cells: {exc}", len(cells)
                ) from exc
            log.debug("cell %s done", key)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_cell, config, *key): key for key in keys}
            done, pending = wait(futures, return_when=FIRST_EXCEPTION)
            failed = [f for f in done if f.exception() is not None]
            if failed:
                for f in pending:
                    f.cancel()
                completed = sum(1 for f in done if f.exception() is None)
                first = min(failed, key=lambda f: keys.index(futures[f]))
                exc = first.exception()
                raise SweepError(
                    f"cell {futures[first]} failed after {completed} completed cells: {exc}",
                    completed,
                ) from exc
            for f, key in futures.items():
                cells[key] = f.result()

    return GridResult(config=config, cells={k: cells[k] for k in keys})


def argmax_beta(grid: GridResult, alpha_index: int) -> Tuple[float, float]:
    """``(beta_hat, mean_q)`` at the maximum of mean quality along one alpha row.

    Ties go to the smaller beta.
    """
    na, nb = grid.config.shape
    if not 0 <= alpha_index < na:
        raise InvalidInputError(f"alpha_index {alpha_index} outside [0, {na})")
    row = [grid.cell(alpha_index, j) for j in range(nb)]
    best = max(row, key=lambda c: (c.mean_q, -c.beta))
    return best.beta, best.mean_q
