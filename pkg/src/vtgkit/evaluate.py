"""Recall@K at temporal-IoU thresholds, averaged per benchmark convention,
plus cross-dataset matrices and report rendering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import (BenchmarkConvention, TimeSpan, intersection_length,
                   span_length)
from .grounder import PredictionSet
from .tables import render_table


class EvalError(ValueError):
    pass


def temporal_iou(a: TimeSpan, b: TimeSpan) -> float:
    """Interval IoU in [0, 1].

    Two degenerate spans score 0 unless coincident, then 1 (documented
    convention so identity stays an exact hit).
    """
    inter = intersection_length(a, b)
    union = span_length(a) + span_length(b) - inter
    if union <= 0.0:
        return 1.0 if (a.start == b.start and a.end == b.end) else 0.0
    return inter / union


def hit_at(preds: PredictionSet, gt: TimeSpan, k: int, theta: float) -> bool:
    """True iff any of the top-min(k, n) candidates reaches IoU >= theta."""
    for span, _ in preds.candidates[:k]:
        if temporal_iou(span, gt) >= theta:
            return True
    return False


@dataclass
class RecallReport:
    dataset: str
    convention: BenchmarkConvention
    cells: dict[tuple[int, float], float]  # (K, theta) -> percentage
    averages: dict[int, float]             # K -> mean over theta cells
    n_queries: int


def _assert_monotone(cells: Mapping[tuple[int, float], float],
                     convention: BenchmarkConvention) -> None:
    # structurally guaranteed; kept as a cheap internal consistency check
    for k in convention.ranks:
        vals = [cells[(k, t)] for t in convention.iou_thresholds]
        if any(b > a + 1e-9 for a, b in zip(vals, vals[1:])):
            raise AssertionError("recall must be non-increasing in theta")
    for t in convention.iou_thresholds:
        vals = [cells[(k, t)] for k in convention.ranks]
        if any(b < a - 1e-9 for a, b in zip(vals, vals[1:])):
            raise AssertionError("recall must be non-decreasing in K")


def recall_table(preds: Sequence[PredictionSet], gts: Mapping[str, TimeSpan],
                 convention: BenchmarkConvention,
                 dataset: str = "custom") -> RecallReport:
    """Recall percentages over the query set keyed by gts.

    Queries without a prediction entry count as misses; predictions whose
    uid has no ground truth are a caller error and reported.
    """
    if not gts:
        raise EvalError("empty evaluation: no ground-truth queries")
    by_uid: dict[str, PredictionSet] = {}
    unmatched = []
    for p in preds:
        if p.uid not in gts:
            unmatched.append(p.uid)
        by_uid[p.uid] = p
    if unmatched:
        raise EvalError(
            f"predictions without ground truth: {sorted(unmatched)}")
    n = len(gts)
    cells: dict[tuple[int, float], float] = {}
    for k in convention.ranks:
        for theta in convention.iou_thresholds:
            hits = 0
            for uid, gt in gts.items():
                p = by_uid.get(uid)
                if p is not None and hit_at(p, gt, k, theta):
                    hits += 1
            cells[(k, theta)] = 100.0 * hits / n
    averages = {k: sum(cells[(k, t)] for t in convention.iou_thresholds)
                   / len(convention.iou_thresholds)
                for k in convention.ranks}
    _assert_monotone(cells, convention)
    return RecallReport(dataset=dataset, convention=convention, cells=cells,
                        averages=averages, n_queries=n)


def mean_r1_r5(report: RecallReport) -> float:
    """Mean of the four cells R@1/R@5 at the convention's two thresholds."""
    conv = report.convention
    if tuple(conv.ranks) != (1, 5):
        raise EvalError(f"mean_r1_r5 needs ranks (1, 5), got {conv.ranks}")
    if len(conv.iou_thresholds) != 2:
        raise EvalError("mean_r1_r5 needs exactly two thresholds")
    try:
        vals = [report.cells[(k, t)] for k in (1, 5)
                for t in conv.iou_thresholds]
    except KeyError as exc:
        raise EvalError(f"missing cell {exc}") from exc
    return sum(vals) / 4.0


@dataclass
class CrossMatrix:
    """Train-on-rows, test-on-columns grid of average R@1 percentages."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    cells: dict[tuple[str, str], float]


def cross_matrix(reports: Mapping[tuple[str, str], float],
                 rows: Sequence[str] | None = None,
                 cols: Sequence[str] | None = None) -> CrossMatrix:
    """Assemble a cross-dataset matrix from (train, test) -> value entries.

    Absent cells stay absent and render as "--".
    """
    if rows is None:
        rows = sorted({tr for tr, _ in reports})
    if cols is None:
        cols = sorted({te for _, te in reports})
    return CrossMatrix(rows=tuple(rows), cols=tuple(cols),
                       cells=dict(reports))


def _cell_text(value: float | None, mark: bool, fmt: str) -> str:
    if value is None:
        return "--"
    text = f"{value:.2f}"
    if not mark:
        return text
    if fmt == "markdown-table":
        return f"**{text}**"
    if fmt == "aligned-text":
        return f"{text}*"
    return text


def render_matrix(matrix: CrossMatrix, fmt: str = "aligned-text") -> str:
    """Render the matrix; diagonal cells (train == test) are marked."""
    headers = ["train/test", *matrix.cols]
    rows = []
    for tr in matrix.rows:
        row = [tr]
        for te in matrix.cols:
            row.append(_cell_text(matrix.cells.get((tr, te)), tr == te, fmt))
        rows.append(row)
    return render_table(headers, rows, fmt)


def render_report(reports: Sequence[RecallReport],
                  fmt: str = "aligned-text") -> str:
    """Render recall reports, one row per dataset, 2-decimal percentages."""
    keys: list[tuple[int, float]] = []
    for rep in reports:
        for k in rep.convention.ranks:
            for t in rep.convention.iou_thresholds:
                if (k, t) not in keys:
                    keys.append((k, t))
    keys.sort()
    avg_ks: list[int] = sorted({k for k, _ in keys})
    headers = ["dataset", "queries"]
    headers += [f"R@{k}@{t:.2f}" for k, t in keys]
    headers += [f"Avg@{k}" for k in avg_ks]
    rows = []
    for rep in reports:
        row = [rep.dataset, str(rep.n_queries)]
        for key in keys:
            v = rep.cells.get(key)
            row.append("--" if v is None else f"{v:.2f}")
        for k in avg_ks:
            v = rep.averages.get(k)
            row.append("--" if v is None else f"{v:.2f}")
        rows.append(row)
    return render_table(headers, rows, fmt)
