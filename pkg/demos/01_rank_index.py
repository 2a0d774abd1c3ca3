"""
Incremental ranks and rank-power sampling
=========================================

The popularity branch draws item ``i`` with probability proportional to
``rank_i ** -alpha``.  ``RankIndex`` keeps ranks up to date one selection
at a time instead of re-sorting.
"""

# %%
import numpy as np

from popmarket import build, naive_ranks

# Three items, two of them tied.  Under the default max-rank convention an
# item's rank counts every item selected at least as often, so the tied
# pair shares rank 2.
idx = build([5, 5, 3], alpha=1.0)
print("ranks (max_rank):", idx.ranks())
print("probabilities   :", idx.probabilities())

# The alternative convention gives the tied pair rank 1 and skips to 3.
print("ranks (min_rank):", build([5, 5, 3], 1.0, "min_rank").ranks())

# %%
# Incrementing moves one item up by one count; the index stays equal to a
# from-scratch recomputation.
rng = np.random.default_rng(0)
idx = build(np.ones(8, dtype=int), alpha=1.5)
for _ in range(200):
    idx.increment(idx.sample(rng))
print("counts:", idx.counts)
print("ranks :", idx.ranks())
assert np.array_equal(idx.ranks(), naive_ranks(idx.counts))

# %%
# Empirical draw frequencies against the exact distribution.
draws = idx.sample_many(rng, 200_000)
freq = np.bincount(draws, minlength=8) / draws.size
for item, (f, p) in enumerate(zip(freq, idx.probabilities())):
    print(f"item {item}: empirical {f:.4f}  exact {p:.4f}")
