"""Figures written next to the CSV reports (Agg backend, files only)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (math.sqrt(5) - 1.0) / 2.0
fig_width = 5.0

params = {
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 150,
    "lines.markersize": 4,
    "lines.linewidth": 1,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def pareto_figure(rows: Sequence, path, title: str = "Pareto trade-off") -> Path:
    """Relative error against cardinality, one marker per gamma."""
    ok = [r for r in rows if r.error is None and math.isfinite(r.relative_error)]
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        if ok:
            card = np.array([r.cardinality for r in ok])
            re = np.array([r.relative_error for r in ok])
            ax.plot(card, re, "o-", color="#2b8cbe")
            for r in ok:
                ax.annotate(f"{r.gamma:.2g}", (r.cardinality, r.relative_error),
                            textcoords="offset points", xytext=(3, 3), fontsize=6)
            if np.all(re > 0):
                ax.set_yscale("log")
        ax.set_xlabel("cardinality")
        ax.set_ylabel("relative error")
        ax.set_title(title)
        return _save(fig, path)


def gap_figure(trace: Sequence[dict], path) -> Path:
    """Primal value, dual bound and gap per epoch of one solve."""
    epochs = np.array([t["epoch"] for t in trace])
    with plt.rc_context(params):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(fig_width, fig_width))
        ax1.plot(epochs, [t["primal"] for t in trace], label="primal")
        ax1.plot(epochs, [t["dual"] for t in trace], label="dual bound")
        ax1.legend()
        ax1.set_ylabel("objective")
        gaps = np.maximum([t["gap"] for t in trace], 1e-300)
        ax2.semilogy(epochs, gaps, color="k")
        ax2.set_ylabel("duality gap")
        ax2.set_xlabel("epoch")
        return _save(fig, path)


def fit_figure(y, y_hat, path, title: str = "measured vs. model") -> Path:
    y = np.asarray(y)
    y_hat = np.asarray(y_hat)
    with plt.rc_context(params):
        fig, ax = plt.subplots(figsize=(fig_width * golden_mean * 1.3,) * 2)
        ax.plot(y, y_hat, ".", alpha=0.6)
        lo, hi = float(min(y.min(), y_hat.min())), float(max(y.max(), y_hat.max()))
        ax.plot([lo, hi], [lo, hi], "k--", lw=0.8)
        ax.set_xlabel("measured")
        ax.set_ylabel("model")
        ax.set_title(title)
        return _save(fig, path)


def section_figure(models: dict, fixed: dict, var: int, lo: float, hi: float, path,
                   n_points: int = 200) -> Path:
    """1-D sections of one or more models, varying input ``var`` (0-based)
    with the other inputs held at ``fixed`` (0-based index -> value)."""
    grid = np.linspace(lo, hi, n_points)
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        for (label, model), style in zip(models.items(), ["-", "--", ":", "-."]):
            w = np.empty((n_points, model.n_vars))
            for j, v in fixed.items():
                w[:, j] = v
            w[:, var] = grid
            ax.plot(grid, model(w), style, label=label)
        ax.set_xlabel(f"w{var + 1}")
        ax.set_ylabel("psi(w)")
        ax.legend()
        return _save(fig, path)


def loo_figure(result, path) -> Path:
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        ax.bar(np.arange(result.nu.size), result.nu, color="#4eb3d3")
        ax.set_xlabel("validation point")
        ax.set_ylabel("nu_j")
        ax.set_title(f"leave-one-out, AE = {result.ae:.3g}")
        return _save(fig, path)
