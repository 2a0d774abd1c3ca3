"""Incremental popularity ranks and rank-power sampling.

Items are kept in an array sorted by count (descending).  Items sharing a
count form a contiguous *group*; groups live in a doubly linked list ordered
from the most to the least popular.  Incrementing an item swaps it to the
front of its group, after which it either joins the group directly above
(count ``c + 1``) or becomes a new singleton group.  Only that group and the
one above it can change rank, so an update is O(1), and drawing an item with
probability ``r ** -alpha`` is a walk over the groups, O(G) where G is the
number of distinct counts.

The numba kernels below operate on the raw arrays so the simulation loop in
:mod:`popmarket.market` can call them without Python overhead.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .exceptions import InvalidInputError

MAX_RANK = "max_rank"
MIN_RANK = "min_rank"
TIE_RANK_MODES = (MAX_RANK, MIN_RANK)

# total_weight is rebuilt from scratch this often to bound float drift
REFRESH_INTERVAL = 1 << 16

# Rows of the packed int64 state array.  Everything lives in one array (and
# the float weights in another) because numba reference-counts every array
# argument of a compiled call, which dominated the per-step cost when each
# field was passed separately.
COUNTS, ORDER, POS, GID, G_START, G_END, G_COUNT, G_PREV, G_NEXT, FREE, META = range(11)
_N_ROWS = 11
# slots of the META row
_HEAD, _NFREE, _SINCE_REFRESH, _MIN_RANK, _UNIFORM, _N = range(6)
# the float array holds r ** -alpha at index r >= 1; slot 0 caches the total
_TOTAL = 0


def _check_mode(tie_rank_mode):
    if tie_rank_mode not in TIE_RANK_MODES:
        raise InvalidInputError(
            f"tie_rank_mode must be one of {TIE_RANK_MODES}, got {tie_rank_mode!r}"
        )


def naive_ranks(counts, tie_rank_mode=MAX_RANK):
    """From-scratch ranks of ``counts``.

    ``max_rank``: number of items with count >= the item's count.
    ``min_rank``: 1 + number of items with count > the item's count.

    >>> naive_ranks([3, 1, 2]).tolist()
    [1, 3, 2]
    >>> naive_ranks([4, 4, 4, 1], "min_rank").tolist()
    [1, 1, 1, 4]
    """
    _check_mode(tie_rank_mode)
    counts = np.asarray(counts)
    if counts.ndim != 1 or counts.size == 0:
        raise InvalidInputError("counts must be a non-empty 1-d sequence")
    ordered = np.sort(counts)
    if tie_rank_mode == MAX_RANK:
        n_less = np.searchsorted(ordered, counts, side="left")
        return (counts.size - n_less).astype(np.int64)
    n_less_equal = np.searchsorted(ordered, counts, side="right")
    return (counts.size - n_less_equal + 1).astype(np.int64)


def rank_weights(n, alpha):
    """Table ``w[r] = r ** -alpha`` for ranks 1..n; ``w[0]`` is left at 0."""
    table = np.zeros(n + 1, dtype=np.float64)
    table[1:] = np.arange(1, n + 1, dtype=np.float64) ** (-float(alpha))
    return table


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, inline="always")
def _contrib(S, W, g):
    """Total weight of group ``g``: size times the shared rank weight."""
    if S[META, _MIN_RANK]:
        r = S[G_START, g] + 1
    else:
        r = S[G_END, g] + 1
    return (S[G_END, g] - S[G_START, g] + 1) * W[r]


@njit(cache=True)
def _full_weight(S, W):
    total = 0.0
    g = S[META, _HEAD]
    while g >= 0:
        total += _contrib(S, W, g)
        g = S[G_NEXT, g]
    return total


@njit(cache=True)
def _increment(S, W, item):
    g = S[GID, item]
    c = S[COUNTS, item]
    s = S[G_START, g]
    e = S[G_END, g]
    h = S[G_PREV, g]

    old = _contrib(S, W, g)
    if h >= 0:
        old += _contrib(S, W, h)

    # swap item to the front of its group
    p = S[POS, item]
    other = S[ORDER, s]
    S[ORDER, s] = item
    S[ORDER, p] = other
    S[POS, other] = p
    S[POS, item] = s
    S[COUNTS, item] = c + 1

    new = 0.0
    if h >= 0 and S[G_COUNT, h] == c + 1:
        # join the group above
        S[G_END, h] = s
        S[GID, item] = h
        new += _contrib(S, W, h)
        if s == e:
            nxt = S[G_NEXT, g]
            S[G_NEXT, h] = nxt
            if nxt >= 0:
                S[G_PREV, nxt] = h
            S[FREE, S[META, _NFREE]] = g
            S[META, _NFREE] += 1
        else:
            S[G_START, g] = s + 1
            new += _contrib(S, W, g)
    elif s == e:
        # lone item: the group just moves up one count
        S[G_COUNT, g] = c + 1
        new += _contrib(S, W, g)
        if h >= 0:
            new += _contrib(S, W, h)
    else:
        # split off a new singleton group above g
        S[META, _NFREE] -= 1
        n = S[FREE, S[META, _NFREE]]
        S[G_COUNT, n] = c + 1
        S[G_START, n] = s
        S[G_END, n] = s
        S[G_PREV, n] = h
        S[G_NEXT, n] = g
        S[G_PREV, g] = n
        if h >= 0:
            S[G_NEXT, h] = n
            new += _contrib(S, W, h)
        else:
            S[META, _HEAD] = n
        S[G_START, g] = s + 1
        S[GID, item] = n
        new += _contrib(S, W, n)
        new += _contrib(S, W, g)

    S[META, _SINCE_REFRESH] += 1
    if S[META, _SINCE_REFRESH] >= REFRESH_INTERVAL:
        S[META, _SINCE_REFRESH] = 0
        W[_TOTAL] = _full_weight(S, W)
    else:
        W[_TOTAL] += new - old


@njit(cache=True)
def _sample(S, W, u_group, u_member):
    if S[META, _UNIFORM]:
        # alpha == 0: every rank weighs 1
        n = S[META, _N]
        k = int(u_group * n)
        return S[ORDER, min(k, n - 1)]
    target = u_group * W[_TOTAL]
    acc = 0.0
    g = S[META, _HEAD]
    chosen = g
    while g >= 0:
        chosen = g
        acc += _contrib(S, W, g)
        if target < acc:
            break
        g = S[G_NEXT, g]
    start = S[G_START, chosen]
    size = S[G_END, chosen] - start + 1
    k = int(u_member * size)
    if k >= size:
        k = size - 1
    return S[ORDER, start + k]


@njit(cache=True)
def _sample_many(S, W, uniforms):
    out = np.empty(uniforms.shape[0], dtype=np.int64)
    for k in range(uniforms.shape[0]):
        out[k] = _sample(S, W, uniforms[k, 0], uniforms[k, 1])
    return out


# ---------------------------------------------------------------------------


class RankIndex:
    """Popularity counts with incrementally maintained tie-group ranks.

    ``S`` (int64, one row per field) and ``W`` (rank weights, total in slot
    0) hold the whole state; ``counts`` is a view of the counts row.  Change
    counts only through :meth:`increment`.
    """

    def __init__(self, counts, alpha=1.0, tie_rank_mode=MAX_RANK):
        _check_mode(tie_rank_mode)
        counts = np.array(counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise InvalidInputError("counts must be a non-empty 1-d sequence")
        if alpha < 0 or not np.isfinite(alpha):
            raise InvalidInputError(f"alpha must be a finite value >= 0, got {alpha}")
        n = counts.size
        self.alpha = float(alpha)
        self.tie_rank_mode = tie_rank_mode
        self.min_rank = tie_rank_mode == MIN_RANK

        S = np.zeros((_N_ROWS, max(n, 6)), dtype=np.int64)
        S[G_PREV] = -1
        S[G_NEXT] = -1
        S[COUNTS, :n] = counts
        order = np.argsort(-counts, kind="stable")
        S[ORDER, :n] = order
        S[POS, order] = np.arange(n)

        sorted_counts = counts[order]
        starts = np.flatnonzero(np.r_[True, sorted_counts[1:] != sorted_counts[:-1]])
        ends = np.r_[starts[1:] - 1, n - 1]
        n_groups = starts.size
        S[G_START, :n_groups] = starts
        S[G_END, :n_groups] = ends
        S[G_COUNT, :n_groups] = sorted_counts[starts]
        S[G_PREV, 1:n_groups] = np.arange(n_groups - 1)
        S[G_NEXT, : n_groups - 1] = np.arange(1, n_groups)
        S[GID, order] = np.repeat(np.arange(n_groups), ends - starts + 1)

        # unused group ids, popped from the end
        S[FREE, : n - n_groups] = np.arange(n - 1, n_groups - 1, -1)
        S[META, :6] = (0, n - n_groups, 0, int(self.min_rank), int(self.alpha == 0), n)

        self.S = S
        self.W = rank_weights(n, alpha)
        self.counts = S[COUNTS, :n]
        self.recompute_weight()

    @property
    def n_items(self):
        return self.counts.size

    @property
    def total_weight(self):
        """Cached sum of ``r_i ** -alpha`` over all items."""
        return float(self.W[_TOTAL])

    def recompute_weight(self):
        self.W[_TOTAL] = _full_weight(self.S, self.W)
        self.S[META, _SINCE_REFRESH] = 0
        return self.total_weight

    def increment(self, item):
        """Add one selection to ``item`` and update ranks and weight."""
        item = int(item)
        if not 0 <= item < self.n_items:
            raise InvalidInputError(f"item index {item} out of range [0, {self.n_items})")
        _increment(self.S, self.W, item)

    def sample(self, rng):
        """Draw an item with probability ``r_i ** -alpha / total_weight``.

        Consumes two uniforms from ``rng``: one picks the tie group by
        weight, the other a member of that group.
        """
        u_group, u_member = rng.random(2)
        return self.sample_from_uniforms(u_group, u_member)

    def sample_from_uniforms(self, u_group, u_member):
        return int(_sample(self.S, self.W, u_group, u_member))

    def sample_many(self, rng, size):
        """``size`` independent draws from the current (frozen) ranking."""
        return _sample_many(self.S, self.W, rng.random((int(size), 2)))


    def groups(self):
        """List of ``(count, members)`` from most to least popular."""
        out = []
        S = self.S
        g = S[META, _HEAD]
        while g >= 0:
            members = S[ORDER, S[G_START, g] : S[G_END, g] + 1]
            out.append((int(S[G_COUNT, g]), frozenset(members.tolist())))
            g = S[G_NEXT, g]
        return out

    def ranks(self):
        """Rank of every item, read from the group structure."""
        r = np.empty(self.n_items, dtype=np.int64)
        S = self.S
        g = S[META, _HEAD]
        while g >= 0:
            members = S[ORDER, S[G_START, g] : S[G_END, g] + 1]
            r[members] = S[G_START, g] + 1 if self.min_rank else S[G_END, g] + 1
            g = S[G_NEXT, g]
        return r

    def probabilities(self):
        """Selection probability of every item under the rank-power rule."""
        w = self.W[self.ranks()]
        return w / w.sum()

    def __repr__(self):
        return (
            f"RankIndex(n_items={self.n_items}, alpha={self.alpha}, "
            f"tie_rank_mode={self.tie_rank_mode!r}, n_groups={len(self.groups())})"
        )


def build(counts, alpha=1.0, tie_rank_mode=MAX_RANK):
    """Build a :class:`RankIndex` from initial ``counts``."""
    return RankIndex(counts, alpha, tie_rank_mode)
