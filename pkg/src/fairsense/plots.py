"""Static figure rendering for report outputs.

All figures are written as SVG next to the delimited files they illustrate.
The Agg backend and a fixed hash salt keep rendering usable and stable in
headless batch runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["svg.hashsalt"] = "fairsense"

FIGURE_FORMAT = "svg"


def save_scatter(x, y, xlabel: str, ylabel: str, title: str, path) -> Path:
    """One agreement scatter: core A values against core B values."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    ax.scatter(np.asarray(x), np.asarray(y), s=22, alpha=0.8, edgecolors="none")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return path


def save_correlation_heatmap(names, matrix, title: str, path) -> Path:
    """Annotated heatmap of a symmetric correlation matrix; NaN cells stay blank."""
    path = Path(path)
    matrix = np.asarray(matrix, dtype=float)
    k = len(names)
    fig, ax = plt.subplots(figsize=(1.6 + 0.75 * k, 1.4 + 0.75 * k))
    im = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(k), labels=names, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(k), labels=names, fontsize=8)
    for i in range(k):
        for j in range(k):
            if i == j:
                ax.text(j, i, "-", ha="center", va="center", fontsize=8)
            elif np.isnan(matrix[i, j]):
                ax.text(j, i, "nan", ha="center", va="center", fontsize=8, color="gray")
            else:
                ax.text(j, i, f"{matrix[i, j]:.2f}", ha="center", va="center", fontsize=8)
    ax.set_title(title, fontsize=10)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return path
