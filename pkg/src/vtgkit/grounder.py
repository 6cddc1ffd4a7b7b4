"""Deterministic similarity grounder over precomputed features.

Cosine frame scores, multi-scale sliding-window proposals, greedy NMS and
a top-K cut.  This is a non-neural stand-in for a trained grounding head;
its prediction file format is the integration point for real models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .core import TimeSpan, intersection_length, span_length
from .features import FeatureSequence, QueryEmbedding

Candidate = tuple[TimeSpan, float]

# Grid comparisons tolerate accumulated stride rounding.
_GRID_EPS = 1e-9


@dataclass(frozen=True)
class GrounderConfig:
    window_lengths: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    stride: float = 2.5
    nms_iou: float = 0.5
    top_k: int = 5

    def __post_init__(self):
        ws = tuple(float(w) for w in self.window_lengths)
        if not ws or any(w <= 0 for w in ws):
            raise ValueError("window_lengths must be positive")
        if tuple(sorted(ws)) != ws:
            raise ValueError("window_lengths must be ascending")
        object.__setattr__(self, "window_lengths", ws)
        object.__setattr__(self, "stride", float(self.stride))
        if self.stride <= 0:
            raise ValueError("stride must be positive")
        if not (0.0 < self.nms_iou < 1.0):
            raise ValueError("nms_iou must lie in (0, 1)")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


def _rank_key(cand: Candidate):
    span, score = cand
    return (-score, span.start, span.length)


@dataclass(frozen=True)
class PredictionSet:
    """Ranked span candidates for one query.

    Candidates are sorted by descending score; ties break toward the
    earlier start, then the shorter span.
    """

    uid: str
    candidates: tuple[Candidate, ...]
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        cands = tuple((TimeSpan(s.start, s.end), float(v))
                      for s, v in self.candidates)
        if list(cands) != sorted(cands, key=_rank_key):
            raise ValueError("candidates must be sorted by score with "
                             "(start, length) tie-break")
        object.__setattr__(self, "candidates", cands)


def score_frames(f: FeatureSequence, q: QueryEmbedding) -> np.ndarray:
    """Cosine similarity of every frame against the query; zero vectors
    score 0."""
    if q.vector.shape[0] != f.dim:
        raise ValueError(
            f"dimension mismatch: features D={f.dim}, query D={q.vector.shape[0]}")
    frames = f.frames.astype(np.float64)
    qv = q.vector.astype(np.float64)
    qn = float(np.linalg.norm(qv))
    fn = np.linalg.norm(frames, axis=1)
    denom = fn * qn
    out = np.zeros(f.num_frames, dtype=np.float64)
    ok = denom > 0.0
    if qn > 0.0:
        out[ok] = frames[ok] @ qv / denom[ok]
    return out


def propose(scores: np.ndarray, fps: float,
            cfg: GrounderConfig = GrounderConfig()) -> list[Candidate]:
    """Multi-scale sliding-window candidates, unsorted.

    Starts lie on the stride grid with starts beyond duration - stride
    excluded; spans are clipped to the video end and scored by the mean
    frame score inside.  A window longer than the whole video yields the
    single full-video candidate.  Identical clipped spans from different
    window lengths are merged.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size < 1:
        raise ValueError("scores must be a non-empty vector")
    n = scores.size
    duration = n / fps
    prefix = np.concatenate([[0.0], np.cumsum(scores)])

    def window_mean(t0: float, t1: float) -> float:
        # frames with timestamp i/fps in [t0, t1)
        lo = int(np.ceil(t0 * fps - _GRID_EPS))
        hi = int(np.ceil(t1 * fps - _GRID_EPS))
        lo = max(0, min(lo, n))
        hi = max(lo, min(hi, n))
        if hi == lo:
            return 0.0
        return float((prefix[hi] - prefix[lo]) / (hi - lo))

    seen: dict[tuple[float, float], float] = {}
    for w in cfg.window_lengths:
        if w > duration:
            seen.setdefault((0.0, duration), window_mean(0.0, duration))
            continue
        last_start = max(0.0, duration - cfg.stride)
        k = 0
        while True:
            t = k * cfg.stride
            if t > last_start + _GRID_EPS:
                break
            end = min(t + w, duration)
            if end > t:
                seen.setdefault((t, end), window_mean(t, end))
            k += 1
    return [(TimeSpan(s, e), v) for (s, e), v in seen.items()]


def _iou(a: TimeSpan, b: TimeSpan) -> float:
    inter = intersection_length(a, b)
    union = span_length(a) + span_length(b) - inter
    return inter / union if union > 0.0 else 0.0


def nms(candidates: list[Candidate], iou_threshold: float) -> list[Candidate]:
    """Greedy suppression: keep the best remaining candidate, drop others
    overlapping it with IoU strictly above the threshold."""
    pool = sorted(candidates, key=_rank_key)
    kept: list[Candidate] = []
    while pool:
        best = pool.pop(0)
        kept.append(best)
        pool = [c for c in pool if _iou(c[0], best[0]) <= iou_threshold]
    return kept


def ground(f: FeatureSequence, q: QueryEmbedding,
           cfg: GrounderConfig = GrounderConfig()) -> PredictionSet:
    """Full pipeline: cosine scores -> proposals -> NMS -> top-K."""
    scores = score_frames(f, q)
    diagnostics: tuple[str, ...] = ()
    if float(np.linalg.norm(q.vector)) == 0.0:
        diagnostics = ("degenerate query",)
    cands = propose(scores, f.fps, cfg)
    kept = nms(cands, cfg.nms_iou)[:cfg.top_k]
    return PredictionSet(uid=q.uid, candidates=tuple(kept),
                         diagnostics=diagnostics)


def write_predictions(preds: Iterable[PredictionSet], sink: IO[str]) -> int:
    """One line per query: {"uid", "spans": [[start, end, score], ...]}."""
    count = 0
    for p in preds:
        spans = [[s.start, s.end, v] for s, v in p.candidates]
        sink.write(json.dumps({"uid": p.uid, "spans": spans}) + "\n")
        count += 1
    return count


def read_predictions(lines: Iterable[str]) -> list[PredictionSet]:
    out = []
    for i, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            cands = tuple((TimeSpan(float(s), float(e)), float(v))
                          for s, e, v in rec["spans"])
            out.append(PredictionSet(uid=str(rec["uid"]), candidates=cands))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"prediction line {i}: {exc}") from exc
    return out
