"""
Average quality over time
=========================

With heavy popularity bias (beta=0.8), a strong focus on the top ranks
(alpha=2) locks in an early ranking, while alpha=1 keeps improving.
"""

# %%
from popmarket import SweepConfig, TraceSpec, run_grid

config = SweepConfig(
    alphas=(1.0, 2.0),
    betas=(0.8,),
    n_items=100,
    T=100_000,
    n_runs=100,
    master_seed=11,
    trace=TraceSpec(n_points=15, scale="log"),
)
grid = run_grid(config)

# %%
for i, alpha in enumerate(config.alphas):
    cell = grid.cell(i, 0)
    print(f"alpha={alpha:g}, beta=0.8  (final sd across runs {cell.std_q:.4f})")
    for t, m, s in zip(cell.trace.times, cell.trace.mean_q, cell.trace.stderr_q):
        print(f"   t={t:>7d}  q={m:.4f} +/- {s:.4f}")
