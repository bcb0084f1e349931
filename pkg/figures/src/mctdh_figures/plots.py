"""The four figures: model curves, space-time density map, p_n(t), sigma_min(t)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import load_density, load_meta, load_probabilities


def plot_model(run_dir, out_path, dpi: int = 150) -> Path:
    """Trap potential and absorber overlay, evaluated from the config echo."""
    meta = load_meta(run_dir)
    cfg = meta["config"]
    x = load_density(run_dir).x
    trap = -cfg["trap_depth"] * np.exp(-(x**2) / cfg["trap_width"])
    d = np.abs(x) - cfg["cap_onset"]
    cap = np.where(d > 0, d, 0.0) ** 2

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, trap, label="trap $V(x)$", color="tab:blue")
    ax.plot(x, cap, label=r"absorber $\Gamma(x)$", color="tab:red")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_xlim(x[0], -x[0])
    ax.set_xlabel("$x$")
    ax.set_ylabel("energy")
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)
    return out_path


def plot_density_map(run_dir, out_path, dpi: int = 150) -> Path:
    """Space-time map of sqrt(n(x,t)); darker means higher density."""
    table = load_density(run_dir)
    contrast = np.sqrt(np.clip(table.density, 0.0, None))

    fig, ax = plt.subplots(figsize=(5, 6))
    mesh = ax.pcolormesh(
        table.x, table.t, contrast, cmap="Greys", shading="nearest", rasterized=True
    )
    fig.colorbar(mesh, ax=ax, label=r"$\sqrt{n(x,t)}$")
    ax.set_xlabel("$x$")
    ax.set_ylabel("$t$")
    ax.set_ylim(table.t[0], table.t[-1])
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)
    return out_path


def plot_probabilities(run_dir, out_path, dpi: int = 150) -> Path:
    """p_n(t) curves; p_0 stays off the main axes (too small to see)."""
    table = load_probabilities(run_dir)
    fig, ax = plt.subplots(figsize=(6, 4))
    for n in range(1, table.probs.shape[1]):
        ax.plot(table.t, table.probs[:, n], label=f"$p_{{{n}}}$")
    ax.set_xlabel("$t$")
    ax.set_ylabel("probability")
    ax.set_xlim(table.t[0], table.t[-1])
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)
    return out_path


def plot_sigma(run_dir, out_path, dpi: int = 150) -> Path:
    """Smallest eigenvalue of the inverted one-body matrix, log scale."""
    table = load_probabilities(run_dir)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(table.t, np.clip(table.sigma_min, 1e-300, None), color="tab:purple")
    ax.set_xlabel("$t$")
    ax.set_ylabel(r"$\sigma_\mathrm{min}$")
    ax.set_xlim(table.t[0], table.t[-1])
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)
    return out_path


ALL_PLOTS = {
    "model": plot_model,
    "density-map": plot_density_map,
    "probabilities": plot_probabilities,
    "sigma": plot_sigma,
}
