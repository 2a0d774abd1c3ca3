"""
Average quality and faithfulness over (alpha, beta)
===================================================

A reduced version of the full sweep: fewer runs per cell so it finishes in
a couple of minutes on one core.  Raise ``n_runs`` for smoother surfaces.
"""

# %%
import numpy as np

from popmarket import SweepConfig, argmax_beta, run_grid

config = SweepConfig(
    alphas=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0),
    betas=tuple(np.round(np.linspace(0, 1, 11), 2)),
    n_items=100,
    T=100_000,
    n_runs=20,
    master_seed=7,
)
grid = run_grid(config, workers=4)

# %%
mean_q = grid.table("mean_q")
mean_tau = grid.table("mean_tau")
print("mean quality (rows alpha, columns beta)")
print("       " + " ".join(f"{b:5.1f}" for b in config.betas))
for a, row in zip(config.alphas, mean_q):
    print(f"a={a:3.1f}  " + " ".join(f"{v:.3f}" for v in row))

# %%
for i, a in enumerate(config.alphas):
    beta_hat, q_hat = argmax_beta(grid, i)
    print(f"alpha={a:3.1f}: best beta {beta_hat:.1f} (q={q_hat:.4f})")

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    extent = (config.betas[0], config.betas[-1], config.alphas[0], config.alphas[-1])
    for ax, data, label in ((axes[0], mean_q, "average quality"), (axes[1], mean_tau, "Kendall tau")):
        im = ax.imshow(data, origin="lower", aspect="auto", extent=extent)
        ax.set_xlabel("beta")
        ax.set_ylabel("alpha")
        ax.set_title(label)
        fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig("quality_heatmap.png", dpi=120)
    print("saved quality_heatmap.png")
