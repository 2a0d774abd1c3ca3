"""Outcome measures: average consumed quality, Kendall tau, trace schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .exceptions import InvalidInputError, UndefinedCorrelationError

TAU_B = "tau_b"
TAU_A = "tau_a"
TAU_VARIANTS = (TAU_B, TAU_A)


def average_quality(popularity, quality) -> float:
    """Popularity-weighted mean quality ``sum(p * q) / sum(p)``."""
    p = np.asarray(popularity, dtype=np.float64)
    q = np.asarray(quality, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidInputError(
            f"popularity and quality must be 1-d of equal length, got {p.shape} and {q.shape}"
        )
    total = p.sum()
    if total <= 0:
        raise InvalidInputError("total popularity must be positive")
    return float(np.dot(p, q) / total)


@njit(cache=True)
def _pair_counts(x, y):
    n = x.size
    concordant = 0
    discordant = 0
    tied_x = 0
    tied_y = 0
    for i in range(n - 1):
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            dx = x[j] - xi
            dy = y[j] - yi
            if dx == 0:
                tied_x += 1
                if dy == 0:
                    tied_y += 1
            elif dy == 0:
                tied_y += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    return concordant, discordant, tied_x, tied_y


def kendall_tau(x, y, variant: str = TAU_B) -> float:
    """Kendall rank correlation between ``x`` and ``y``.

    ``tau_b`` corrects for ties, ``(C - D) / sqrt((n0 - tx) * (n0 - ty))``,
    where ``tx``/``ty`` count pairs tied in ``x``/``y``.  ``tau_a`` is
    ``(C - D) / n0``.  Pairs are counted directly, which is O(n**2) and
    plenty for markets of a few thousand items.
    """
    if variant not in TAU_VARIANTS:
        raise InvalidInputError(f"variant must be one of {TAU_VARIANTS}, got {variant!r}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError(f"x and y must be 1-d of equal length, got {x.shape} and {y.shape}")
    n = x.size
    if n < 2:
        raise InvalidInputError("kendall_tau needs at least two observations")
    c, d, tx, ty = _pair_counts(x, y)
    n0 = n * (n - 1) // 2
    if variant == TAU_A:
        return (c - d) / n0
    denom = (n0 - tx) * (n0 - ty)
    if denom == 0:
        raise UndefinedCorrelationError("tau_b is undefined when either input is constant")
    return (c - d) / math.sqrt(denom)


@dataclass(frozen=True)
class TraceSchedule:
    """Steps (1-based, strictly increasing) at which average quality is recorded."""

    times: tuple
    scale: str = "explicit"

    def __post_init__(self):
        times = tuple(int(t) for t in self.times)
        if not times:
            raise InvalidInputError("trace schedule needs at least one time")
        if times[0] < 1 or any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidInputError("trace times must be >= 1 and strictly increasing")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return len(self.times)

    def check_horizon(self, T):
        if self.times[-1] > T:
            raise InvalidInputError(f"trace time {self.times[-1]} exceeds T={T}")


def trace_schedule(T: int, n_points: int = 20, scale: str = "log") -> TraceSchedule:
    """Trace times ending at ``T``.

    ``log`` spaces the points geometrically over ``[max(10, T / 1e4), T]``
    (rounded, duplicates dropped); ``linear`` spaces them evenly.
    """
    if not 1 <= n_points <= T:
        raise InvalidInputError(f"n_points must be in [1, T={T}], got {n_points}")
    if scale == "linear":
        times = [round(T * k / n_points) for k in range(1, n_points + 1)]
    elif scale == "log":
        if n_points == 1:
            times = [T]
        else:
            lo = min(max(10.0, T / 1e4), T)
            times = np.rint(np.geomspace(lo, T, n_points)).astype(np.int64).tolist()
            times[-1] = T
    else:
        raise InvalidInputError(f"scale must be 'log' or 'linear', got {scale!r}")
    return TraceSchedule(tuple(sorted(set(times))), scale)


@dataclass(frozen=True)
class TraceSummary:
    """Across-run mean and standard error of average quality at each trace time."""

    times: tuple
    mean_q: tuple
    stderr_q: tuple


@dataclass(frozen=True)
class CellSummary:
    alpha: float
    beta: float
    n_runs: int
    mean_q: float
    stderr_q: float
    mean_tau: float
    stderr_tau: float
    trace: Optional[TraceSummary] = field(default=None, compare=True)

    @property
    def std_q(self):
        """Across-run sample standard deviation of final average quality."""
        return self.stderr_q * math.sqrt(self.n_runs)


def _mean_stderr(values):
    values = np.asarray(values, dtype=np.float64)
    # sorting makes the float sums independent of run order
    values = np.sort(values, axis=0)
    n = values.shape[0]
    mean = values.sum(axis=0) / n
    if n < 2:
        return mean, np.zeros_like(mean)
    sd = np.sqrt(((values - mean) ** 2).sum(axis=0) / (n - 1))
    return mean, sd / math.sqrt(n)


def summarize_runs(results: Sequence, alpha: float, beta: float) -> CellSummary:
    """Mean and standard error of final average quality and tau over runs.

    A single run gets standard errors of 0.
    """
    results = list(results)
    if not results:
        raise InvalidInputError("cannot summarize an empty collection of runs")
    mean_q, se_q = _mean_stderr([r.mean_quality for r in results])
    mean_tau, se_tau = _mean_stderr([r.tau for r in results])

    trace = None
    if all(r.trace_times for r in results):
        times = results[0].trace_times
        if any(r.trace_times != times for r in results):
            raise InvalidInputError("runs were traced on different schedules")
        tm, ts = _mean_stderr([r.trace_values for r in results])
        trace = TraceSummary(times, tuple(tm.tolist()), tuple(ts.tolist()))

    return CellSummary(
        alpha=float(alpha),
        beta=float(beta),
        n_runs=len(results),
        mean_q=float(mean_q),
        stderr_q=float(se_q),
        mean_tau=float(mean_tau),
        stderr_tau=float(se_tau),
        trace=trace,
    )
