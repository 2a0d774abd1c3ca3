"""Market state and the selection dynamics.

Every step consumes exactly three uniforms from the realization's stream,
in this order: the mixture coin (popularity branch when ``u < beta``), the
item draw, and the tie-group member draw.  The third uniform is drawn even
on the quality branch, so a replay never depends on which branch fired.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from . import metrics
from .exceptions import DegenerateQualityError, InvalidInputError
from .ranking import COUNTS, MAX_RANK, RankIndex, _check_mode, _increment, _sample

# uniforms generated per call to the compiled loop
CHUNK_STEPS = 1 << 15


class Branch(enum.Enum):
    POPULARITY = "popularity"
    QUALITY = "quality"


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 1.0
    beta: float = 0.0
    n_items: int = 100
    tie_rank_mode: str = MAX_RANK

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise InvalidInputError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 <= self.beta <= 1:
            raise InvalidInputError(f"beta must be in [0, 1], got {self.beta}")
        if int(self.n_items) != self.n_items or self.n_items < 2:
            raise InvalidInputError(f"n_items must be an integer >= 2, got {self.n_items}")
        _check_mode(self.tie_rank_mode)


@dataclass(frozen=True)
class SelectionRecord:
    step: int
    item: int
    branch: Branch


@dataclass
class MarketState:
    """Qualities, popularity counts and the live rank index of one market.

    ``popularity`` is the rank index's own count array, so the two can
    never disagree.
    """

    qualities: np.ndarray
    rank_index: RankIndex
    t: int = 0
    quality_prob: np.ndarray = field(init=False, repr=False)
    quality_alias: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.qualities.sum() > 0:
            raise DegenerateQualityError("all qualities are zero; quality choice is undefined")
        self.quality_prob, self.quality_alias = alias_table(self.qualities)

    @property
    def popularity(self) -> np.ndarray:
        return self.rank_index.counts

    @property
    def n_items(self) -> int:
        return self.qualities.size

    def average_quality(self) -> float:
        return metrics.average_quality(self.popularity, self.qualities)


def _resolve_qualities(params: ModelParams, quality_source, rng) -> np.ndarray:
    if quality_source is None or (isinstance(quality_source, str) and quality_source == "uniform"):
        return rng.random(params.n_items)
    q = np.array(quality_source, dtype=np.float64)
    if q.shape != (params.n_items,):
        raise InvalidInputError(
            f"explicit quality vector must have length {params.n_items}, got shape {q.shape}"
        )
    if not np.all((q >= 0) & (q <= 1)):
        raise InvalidInputError("qualities must lie in [0, 1]")
    return q


def init_market(params: ModelParams, quality_source=None, rng=None) -> MarketState:
    """Fresh market: every item has popularity 1, so all ranks are tied.

    ``quality_source`` is ``None``/``"uniform"`` for ``N`` uniform draws
    from ``rng`` or an explicit length-``N`` vector with entries in [0, 1].
    """
    if rng is None:
        rng = np.random.default_rng()
    q = _resolve_qualities(params, quality_source, rng)
    if not q.sum() > 0:
        raise DegenerateQualityError("all qualities are zero; quality choice is undefined")
    index = RankIndex(np.ones(params.n_items, dtype=np.int64), params.alpha, params.tie_rank_mode)
    return MarketState(qualities=q, rank_index=index)


def alias_table(weights):
    """Walker/Vose alias table for drawing ``i`` with probability ``w_i / sum(w)``.

    Column ``i`` keeps itself with probability ``prob[i]`` and otherwise
    yields ``alias[i]``.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    scaled = (w / w.sum()) * n
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    # leftovers are 1 up to rounding; zero weights never end up here
    for i in small:
        prob[i] = 1.0 if scaled[i] > 0 else 0.0
    return prob, alias


@njit(cache=True, inline="always")
def _quality_pick(u, prob, alias):
    x = u * prob.size
    i = int(x)
    if i >= prob.size:
        i = prob.size - 1
    if x - i < prob[i]:
        return i
    return alias[i]


def select_by_quality(state: MarketState, rng) -> int:
    """Draw ``i`` with probability ``q_i / sum(q)``; the state is unchanged."""
    return int(_quality_pick(rng.random(), state.quality_prob, state.quality_alias))


def select_by_popularity(state: MarketState, rng) -> int:
    """Draw ``i`` with probability ``r_i ** -alpha / sum_j r_j ** -alpha``."""
    return state.rank_index.sample(rng)


def step(state: MarketState, params: ModelParams, rng) -> SelectionRecord:
    """One selection: pick a branch, pick an item, bump its popularity."""
    u_coin, u_item, u_member = rng.random(3)
    if u_coin < params.beta:
        item = state.rank_index.sample_from_uniforms(u_item, u_member)
        branch = Branch.POPULARITY
    else:
        item = int(_quality_pick(u_item, state.quality_prob, state.quality_alias))
        branch = Branch.QUALITY
    state.rank_index.increment(item)
    state.t += 1
    return SelectionRecord(step=state.t, item=item, branch=branch)


@njit(cache=True, nogil=True)
def _run_chunk(S, W, uniforms, t0, beta, qualities, prob, alias, trace_times, trace_values,
               trace_ptr):
    """Advance the market by ``len(uniforms)`` steps starting after step ``t0``.

    Returns the updated trace pointer and the number of popularity-branch steps.
    """
    n_pop = 0
    n = qualities.size
    n_trace = trace_times.size
    for k in range(uniforms.shape[0]):
        if uniforms[k, 0] < beta:
            item = _sample(S, W, uniforms[k, 1], uniforms[k, 2])
            n_pop += 1
        else:
            item = _quality_pick(uniforms[k, 1], prob, alias)
        _increment(S, W, item)
        t = t0 + k + 1
        if trace_ptr < n_trace and trace_times[trace_ptr] == t:
            num = 0.0
            den = 0.0
            for i in range(n):
                num += S[COUNTS, i] * qualities[i]
                den += S[COUNTS, i]
            trace_values[trace_ptr] = num / den
            trace_ptr += 1
    return trace_ptr, n_pop


def advance(state: MarketState, params: ModelParams, n_steps: int, rng,
            trace_times=None, trace_values=None) -> int:
    """Run ``n_steps`` selections in compiled code.

    Consumes the stream exactly as ``n_steps`` calls to :func:`step` would.
    Returns the number of popularity-branch selections.
    """
    ri = state.rank_index
    if trace_times is None:
        trace_times = np.zeros(0, dtype=np.int64)
        trace_values = np.zeros(0, dtype=np.float64)
    ptr = int(np.searchsorted(trace_times, state.t, side="right"))
    n_pop = 0
    done = 0
    while done < n_steps:
        m = min(CHUNK_STEPS, n_steps - done)
        u = rng.random((m, 3))
        ptr, k = _run_chunk(
            ri.S, ri.W, u, state.t, float(params.beta), state.qualities,
            state.quality_prob, state.quality_alias, trace_times, trace_values, ptr,
        )
        n_pop += k
        state.t += m
        done += m
    return n_pop


@dataclass(frozen=True, eq=False)
class RealizationResult:
    """Outcome of one seeded market run."""

    params: ModelParams
    T: int
    seed: int
    qualities: np.ndarray
    popularity: np.ndarray
    mean_quality: float
    tau: float
    trace_times: tuple = ()
    trace_values: tuple = ()
    n_popularity_steps: int = 0

    def same_as(self, other) -> bool:
        """Bit-for-bit equality, arrays included."""
        return (
            self.params == other.params
            and self.T == other.T
            and self.seed == other.seed
            and np.array_equal(self.qualities, other.qualities)
            and np.array_equal(self.popularity, other.popularity)
            and self.mean_quality == other.mean_quality
            and self.tau == other.tau
            and self.trace_times == other.trace_times
            and self.trace_values == other.trace_values
            and self.n_popularity_steps == other.n_popularity_steps
        )

    def top_items(self, k=5):
        """``(item, popularity, quality)`` for the ``k`` most popular items."""
        idx = np.argsort(-self.popularity, kind="stable")[:k]
        return [(int(i), int(self.popularity[i]), float(self.qualities[i])) for i in idx]


def run_realization(params: ModelParams, T: int, trace: Optional[metrics.TraceSchedule] = None,
                    seed: int = 0, qualities=None, tau_variant: str = metrics.TAU_B) -> RealizationResult:
    """Simulate ``T`` selections on a fresh market seeded by ``seed``.

    Qualities are drawn from the same stream before the first step unless
    an explicit vector is given.  If every item ends up with the same
    popularity, tau-b is undefined and reported as ``nan``.
    """
    if int(T) != T or T < 1:
        raise InvalidInputError(f"T must be an integer >= 1, got {T}")
    T = int(T)
    rng = np.random.default_rng(seed)
    state = init_market(params, qualities, rng)

    if trace is not None:
        trace.check_horizon(T)
        times = np.asarray(trace.times, dtype=np.int64)
    else:
        times = np.zeros(0, dtype=np.int64)
    values = np.zeros(times.size, dtype=np.float64)
    n_pop = advance(state, params, T, rng, times, values)

    popularity = state.popularity.copy()
    try:
        tau = metrics.kendall_tau(popularity, state.qualities, tau_variant)
    except metrics.UndefinedCorrelationError:
        tau = float("nan")
    return RealizationResult(
        params=params,
        T=T,
        seed=int(seed),
        qualities=state.qualities,
        popularity=popularity,
        mean_quality=state.average_quality(),
        tau=tau,
        trace_times=tuple(times.tolist()),
        trace_values=tuple(values.tolist()),
        n_popularity_steps=n_pop,
    )
