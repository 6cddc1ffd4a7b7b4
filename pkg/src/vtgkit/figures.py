"""Figure files rendered next to the delimited report output.

Headless only: the Agg backend is forced before pyplot loads, so these
work in batch jobs and tests without a display.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .cost import CostEstimate  # noqa: E402
from .evaluate import CrossMatrix, RecallReport  # noqa: E402
from .ingest import CorpusStats  # noqa: E402


def save_recall_figure(reports: Sequence[RecallReport], path: str) -> str:
    """Grouped bars: one cluster per dataset, one bar per (K, theta)."""
    if not reports:
        raise ValueError("no reports to plot")
    keys: list[tuple[int, float]] = sorted(
        {key for rep in reports for key in rep.cells})
    fig, ax = plt.subplots(figsize=(1.8 + 1.4 * len(reports), 3.6))
    try:
        x = np.arange(len(reports), dtype=float)
        width = 0.8 / len(keys)
        for i, (k, theta) in enumerate(keys):
            vals = [rep.cells.get((k, theta), 0.0) for rep in reports]
            ax.bar(x + (i - (len(keys) - 1) / 2) * width, vals, width,
                   label=f"R@{k}@{theta:.2f}")
        ax.set_xticks(x)
        ax.set_xticklabels([rep.dataset for rep in reports],
                           rotation=20, ha="right")
        ax.set_ylabel("recall (%)")
        ax.set_ylim(0, 100)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path)
    finally:
        plt.close(fig)
    return path


def save_matrix_figure(matrix: CrossMatrix, path: str) -> str:
    """Heatmap of the train-on-rows / test-on-columns grid."""
    grid = np.full((len(matrix.rows), len(matrix.cols)), np.nan)
    for i, tr in enumerate(matrix.rows):
        for j, te in enumerate(matrix.cols):
            value = matrix.cells.get((tr, te))
            if value is not None:
                grid[i, j] = value
    fig, ax = plt.subplots(
        figsize=(1.6 + 0.9 * len(matrix.cols), 1.2 + 0.7 * len(matrix.rows)))
    try:
        shown = ax.imshow(grid, cmap="viridis")
        ax.set_xticks(range(len(matrix.cols)))
        ax.set_xticklabels(matrix.cols, rotation=30, ha="right")
        ax.set_yticks(range(len(matrix.rows)))
        ax.set_yticklabels(matrix.rows)
        ax.set_xlabel("test")
        ax.set_ylabel("train")
        for i in range(len(matrix.rows)):
            for j in range(len(matrix.cols)):
                if not np.isnan(grid[i, j]):
                    ax.text(j, i, f"{grid[i, j]:.1f}", ha="center",
                            va="center", color="white", fontsize=8)
        fig.colorbar(shown, ax=ax, shrink=0.85)
        fig.tight_layout()
        fig.savefig(path)
    finally:
        plt.close(fig)
    return path


def save_cost_figure(estimates: Mapping[str, CostEstimate], path: str) -> str:
    """Stacked feature + grounding TFLOPs per method, log scale."""
    if not estimates:
        raise ValueError("no estimates to plot")
    names = list(estimates)
    feature = [estimates[n].feature_tflops for n in names]
    grounding = [estimates[n].grounding_tflops for n in names]
    fig, ax = plt.subplots(figsize=(1.8 + 1.2 * len(names), 3.6))
    try:
        x = np.arange(len(names), dtype=float)
        ax.bar(x, feature, 0.6, label="feature")
        ax.bar(x, grounding, 0.6, bottom=feature, label="grounding")
        ax.set_xticks(x)
        ax.set_xticklabels(names)
        ax.set_yscale("log")
        ax.set_ylabel("TFLOPs")
        seconds = next(iter(estimates.values())).video_seconds
        ax.set_title(f"compute at {seconds:g} s")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path)
    finally:
        plt.close(fig)
    return path


def save_stats_figure(stats: CorpusStats, path: str) -> str:
    """Query counts and mean segment lengths per dataset."""
    if not stats.per_dataset:
        raise ValueError("no datasets to plot")
    names = list(stats.per_dataset)
    queries = [stats.per_dataset[n].queries for n in names]
    seg = [stats.per_dataset[n].mean_segment_s for n in names]
    fig, (left, right) = plt.subplots(
        1, 2, figsize=(3.0 + 1.6 * len(names), 3.4))
    try:
        x = np.arange(len(names), dtype=float)
        left.bar(x, queries, 0.6, color="tab:blue")
        left.set_xticks(x)
        left.set_xticklabels(names, rotation=20, ha="right")
        left.set_ylabel("queries")
        right.bar(x, seg, 0.6, color="tab:orange")
        right.set_xticks(x)
        right.set_xticklabels(names, rotation=20, ha="right")
        right.set_ylabel("mean segment (s)")
        fig.tight_layout()
        fig.savefig(path)
    finally:
        plt.close(fig)
    return path
