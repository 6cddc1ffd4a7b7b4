"""Naive recall oracle for differential testing.

Deliberately re-implements the whole recall computation as plain double
loops with inline interval arithmetic.  Shares only the data types with
the evaluation module, never its logic; keep it that way.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .core import BenchmarkConvention, TimeSpan
from .evaluate import EvalError, RecallReport
from .grounder import PredictionSet


def oracle_recall(preds: Sequence[PredictionSet],
                  gts: Mapping[str, TimeSpan],
                  convention: BenchmarkConvention,
                  dataset: str = "custom") -> RecallReport:
    if len(gts) == 0:
        raise EvalError("empty evaluation: no ground-truth queries")

    lookup = {}
    bad = []
    for p in preds:
        if p.uid not in gts:
            bad.append(p.uid)
        lookup[p.uid] = p
    if bad:
        raise EvalError(f"predictions without ground truth: {sorted(bad)}")

    cells = {}
    for k in convention.ranks:
        for theta in convention.iou_thresholds:
            hits = 0
            for uid in gts:
                gt = gts[uid]
                pred = lookup.get(uid)
                if pred is None:
                    continue
                found = False
                rank = 0
                for span, _score in pred.candidates:
                    rank += 1
                    if rank > k:
                        break
                    lo = span.start if span.start > gt.start else gt.start
                    hi = span.end if span.end < gt.end else gt.end
                    inter = hi - lo
                    if inter < 0.0:
                        inter = 0.0
                    union = (span.end - span.start) + (gt.end - gt.start) - inter
                    if union <= 0.0:
                        iou = 1.0 if (span.start == gt.start
                                      and span.end == gt.end) else 0.0
                    else:
                        iou = inter / union
                    if iou >= theta:
                        found = True
                        break
                if found:
                    hits += 1
            cells[(k, theta)] = 100.0 * hits / len(gts)

    averages = {}
    for k in convention.ranks:
        total = 0.0
        for theta in convention.iou_thresholds:
            total += cells[(k, theta)]
        averages[k] = total / len(convention.iou_thresholds)
    return RecallReport(dataset=dataset, convention=convention, cells=cells,
                        averages=averages, n_queries=len(gts))
