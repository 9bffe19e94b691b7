"""Figure rendering for the report-producing CLI paths.

Every figure is written next to its delimited data file; nothing here is
needed to produce or consume the numeric artifacts.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def mse_trace_figure(traces, switch_sample, path):
    """Train/test reconstruction error over samples, one line per replica."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for i, tr in enumerate(traces):
        axes[0].plot(tr["sample"], tr["train_mse"], lw=0.8, label=f"replica {i}")
        axes[1].plot(tr["sample"], tr["test_mse"], lw=0.8)
    for ax, title in zip(axes, ("train MSE", "test MSE")):
        ax.axvline(switch_sample, color="k", ls="--", lw=0.8)
        ax.set_xlabel("sample")
        ax.set_title(title)
        ax.set_yscale("log")
    axes[0].set_ylabel("MSE")
    if len(traces) <= 8:
        axes[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def loglik_trace_figure(traces, switch_sample, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, tr in enumerate(traces):
        ax.plot(tr["sample"], tr["log_likelihood"], lw=0.8, label=f"replica {i}")
    ax.axvline(switch_sample, color="k", ls="--", lw=0.8)
    ax.set_xlabel("sample")
    ax.set_ylabel("log-likelihood")
    if len(traces) <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def latent_scatter_figure(latent_mean, color, path):
    """2-d reduced representation, colored by the recorded roll scalar."""
    fig, ax = plt.subplots(figsize=(5, 4.5))
    c = color if color is not None else "tab:blue"
    sc = ax.scatter(latent_mean[:, 0], latent_mean[:, 1], c=c, s=4, cmap="viridis")
    if color is not None:
        fig.colorbar(sc, ax=ax, label="color scalar")
    ax.set_xlabel("latent 0")
    ax.set_ylabel("latent 1")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def sweep_figure(axis_name, values, rows, path):
    """Best/mean train and test MSE against the swept parameter."""
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, style in (
        ("train_best", "o-"),
        ("train_mean", "o--"),
        ("test_best", "s-"),
        ("test_mean", "s--"),
    ):
        ax.plot(values, [r[key] for r in rows], style, label=key.replace("_", " "))
    ax.set_xlabel(axis_name)
    ax.set_ylabel("MSE")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
