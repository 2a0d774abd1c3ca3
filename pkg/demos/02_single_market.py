"""
One market, start to finish
===========================

A single realization: 100 items with uniform random quality, 1e5
selections, 40% of them driven by popularity with exploration cost 1.
"""

# %%
from popmarket import ModelParams, run_realization, trace_schedule

params = ModelParams(alpha=1.0, beta=0.4, n_items=100)
T = 100_000
result = run_realization(params, T, trace_schedule(T, 12), seed=2024)

print(f"average quality of consumed items: {result.mean_quality:.4f}")
print(f"Kendall tau (popularity vs quality): {result.tau:.4f}")
print(f"popularity-branch selections: {result.n_popularity_steps} of {T}")

# %%
print("most popular items (item, popularity, quality):")
for row in result.top_items(5):
    print("  ", row)

# %%
# Average quality over time.
for t, q in zip(result.trace_times, result.trace_values):
    print(f"t={t:>7d}  q={q:.4f}")

# %%
# Pure quality choice for comparison: average quality tends to
# sum(q^2) / sum(q) of the drawn qualities.
baseline = run_realization(ModelParams(alpha=1.0, beta=0.0), T, seed=2024)
q = baseline.qualities
print(f"beta=0: {baseline.mean_quality:.4f}  (closed form {q @ q / q.sum():.4f})")
