"""Matplotlib figure rendering for comparison reports and strength trends.

Figures are written to files (SVG by default, any extension matplotlib
understands) next to the delimited outputs; nothing is displayed
interactively.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .emotionet import LINK_KEYS
from .lexicon import DIMS
from .stats import ComparisonReport


def significance_stars(p: float) -> str:
    """Asterisk annotation: *** p<=.001, ** p<=.01, * p<=.05."""
    if p <= 0.001:
        return "***"
    if p <= 0.01:
        return "**"
    if p <= 0.05:
        return "*"
    return ""


def _footnote(fig, note: str | None) -> None:
    if note:
        fig.text(0.01, 0.01, f"manifest: {note}", fontsize=5, color="gray")


def _annotate(ax, matrix: np.ndarray, p_matrix: np.ndarray | None) -> None:
    n = matrix.shape[0]
    for i in range(n):
        for j in range(n):
            value = matrix[i, j]
            if np.isnan(value):
                continue
            text = f"{value:.2f}"
            if p_matrix is not None and i != j:
                text += significance_stars(p_matrix[i, j])
            ax.text(j, i, text, ha="center", va="center", fontsize=7)


def render_rho_heatmap(
    path: str | Path,
    all21: ComparisonReport,
    inter15: ComparisonReport | None = None,
    title: str = "Emotion network similarity (Spearman rho)",
    note: str | None = None,
) -> Path:
    """Rank-correlation heatmap with significance asterisks.

    When both scopes are given, cells below the diagonal show the all-21
    scope and cells above show the inter-15 scope.
    """
    labels = all21.labels
    n = len(labels)
    matrix = np.array(all21.rho, dtype=float)
    p_matrix = np.array(all21.p_adjusted, dtype=float)
    if inter15 is not None:
        iu = np.triu_indices(n, k=1)
        matrix[iu] = np.array(inter15.rho)[iu]
        p_matrix[iu] = np.array(inter15.p_adjusted)[iu]
        title += "\nbelow diagonal: intra+inter links; above: inter links only"
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * n + 2), max(3.5, 0.6 * n + 1.5)))
    im = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="viridis")
    _annotate(ax, matrix, p_matrix)
    ax.set_xticks(range(n), labels, rotation=45, ha="right", fontsize=7)
    ax.set_yticks(range(n), labels, fontsize=7)
    ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    _footnote(fig, note)
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def render_value_heatmap(
    path: str | Path,
    labels: Sequence[str],
    matrix: np.ndarray,
    title: str = "Concept network overlap (Jaccard index)",
    note: str | None = None,
) -> Path:
    n = len(labels)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * n + 2), max(3.5, 0.6 * n + 1.5)))
    im = ax.imshow(np.asarray(matrix, dtype=float), vmin=0.0, vmax=1.0, cmap="magma")
    _annotate(ax, np.asarray(matrix, dtype=float), None)
    ax.set_xticks(range(n), labels, rotation=45, ha="right", fontsize=7)
    ax.set_yticks(range(n), labels, fontsize=7)
    ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    _footnote(fig, note)
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def render_strength_trends(
    path: str | Path,
    window_ids: Sequence[str],
    rescaled: np.ndarray,
    title: str = "Rescaled emotion link strength per window",
    note: str | None = None,
) -> Path:
    """Line chart of the 21 rescaled link strengths across windows.

    `rescaled` has shape (windows, 21); intra links are drawn solid, inter
    links dashed and thinner.
    """
    rescaled = np.asarray(rescaled, dtype=float)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.8 * len(window_ids) + 3), 5.0))
    x = np.arange(len(window_ids))
    for k, (a, b) in enumerate(LINK_KEYS):
        intra = a is b
        label = f"{a.value[:3]}-{b.value[:3]}"
        ax.plot(
            x,
            rescaled[:, k],
            lw=1.6 if intra else 0.8,
            ls="-" if intra else "--",
            label=label,
        )
    ax.set_xticks(x, window_ids, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("rescaled strength (snapshot median = 1)")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=5, ncol=2, loc="center left", bbox_to_anchor=(1.0, 0.5))
    fig.tight_layout()
    _footnote(fig, note)
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def render_delta_heatmap(
    path: str | Path,
    delta_rows,
    title: str = "Strength change (t statistic, first vs second dataset)",
    note: str | None = None,
) -> Path:
    """6x6 symmetric heatmap of per-link t statistics with asterisks from the
    FDR-adjusted p-values (red = stronger in the first dataset)."""
    n = len(DIMS)
    t_matrix = np.zeros((n, n))
    p_matrix = np.ones((n, n))
    for row in delta_rows:
        i, j = row.dim_i.index, row.dim_j.index
        t_matrix[i, j] = t_matrix[j, i] = row.test.statistic
        p_matrix[i, j] = p_matrix[j, i] = row.test.p_adjusted
    finite = np.isfinite(t_matrix)
    limit = max(1.0, float(np.abs(t_matrix[finite]).max())) if finite.any() else 1.0
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    im = ax.imshow(np.clip(t_matrix, -limit, limit), vmin=-limit, vmax=limit, cmap="coolwarm")
    names = [d.value for d in DIMS]
    for i in range(n):
        for j in range(n):
            ax.text(
                j, i,
                f"{t_matrix[i, j]:.1f}{significance_stars(p_matrix[i, j])}",
                ha="center", va="center", fontsize=7,
            )
    ax.set_xticks(range(n), names, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(n), names, fontsize=8)
    ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    _footnote(fig, note)
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
