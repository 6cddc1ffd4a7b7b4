"""Corpus merging and balanced batch construction.

Every batch draws the same number of videos from each dataset and the
same number of queries from each video, so small corpora recycle while
large ones keep advancing.  Randomness comes from one counter-based
stream per (dataset, replica), making the batch stream a pure function
of (plan, corpus ordering, seed) regardless of scheduling.
"""

from __future__ import annotations

import dataclasses
import json
from collections.abc import Iterable, Iterator, Sequence
from typing import IO

import numpy as np

from .core import PRETRAIN_DATASETS, TARGET_DATASETS, normalize_dataset_id
from .ingest import CanonicalRecord

_STAGES = ("I", "II")
_MAX_SEED = 2 ** 64


class InsufficientCorpusError(ValueError):
    """A dataset in the plan cannot fill its per-batch video quota."""


@dataclasses.dataclass(frozen=True)
class SamplingPlan:
    stage: str
    datasets: tuple[str, ...]
    videos_per_dataset: int
    queries_per_video: int
    replicas: int
    seed: int

    def __post_init__(self) -> None:
        if self.stage not in _STAGES:
            raise ValueError(f"stage must be one of {_STAGES}")
        if not self.datasets:
            raise ValueError("plan needs at least one dataset")
        object.__setattr__(self, "datasets",
                           tuple(normalize_dataset_id(d) for d in self.datasets))
        for name in ("videos_per_dataset", "queries_per_video", "replicas"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.seed < _MAX_SEED:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def samples_per_batch(self) -> int:
        return len(self.datasets) * self.videos_per_dataset \
            * self.queries_per_video

    @classmethod
    def stage_one(cls, seed: int,
                  datasets: Sequence[str] = PRETRAIN_DATASETS) -> "SamplingPlan":
        return cls(stage="I", datasets=tuple(datasets), videos_per_dataset=8,
                   queries_per_video=2, replicas=8, seed=seed)

    @classmethod
    def stage_two(cls, seed: int,
                  datasets: Sequence[str] = TARGET_DATASETS) -> "SamplingPlan":
        return cls(stage="II", datasets=tuple(datasets), videos_per_dataset=4,
                   queries_per_video=2, replicas=1, seed=seed)


_STAGE_DEFAULTS = {
    "I": {"datasets": PRETRAIN_DATASETS, "videos_per_dataset": 8,
          "queries_per_video": 2, "replicas": 8},
    "II": {"datasets": TARGET_DATASETS, "videos_per_dataset": 4,
           "queries_per_video": 2, "replicas": 1},
}


def load_plan(source: str | IO[str] | dict, seed: int | None = None) -> SamplingPlan:
    """SamplingPlan from a JSON config (path, open file, or dict).

    Required keys: "stage" and, unless given as an argument, "seed".
    Everything else falls back to the stage defaults.
    """
    if isinstance(source, dict):
        doc = dict(source)
    else:
        if isinstance(source, str):
            with open(source, encoding="utf-8") as handle:
                doc = json.load(handle)
        else:
            doc = json.load(source)
        if not isinstance(doc, dict):
            raise ValueError("plan config must be a JSON object")
    stage = str(doc.get("stage", "")).upper()
    if stage not in _STAGES:
        raise ValueError('plan config needs "stage": "I" or "II"')
    defaults = _STAGE_DEFAULTS[stage]
    if seed is None:
        if "seed" not in doc:
            raise ValueError('plan config needs a "seed"')
        seed = int(doc["seed"])
    return SamplingPlan(
        stage=stage,
        datasets=tuple(doc.get("datasets", defaults["datasets"])),
        videos_per_dataset=int(doc.get("videos_per_dataset",
                                       defaults["videos_per_dataset"])),
        queries_per_video=int(doc.get("queries_per_video",
                                      defaults["queries_per_video"])),
        replicas=int(doc.get("replicas", defaults["replicas"])),
        seed=seed,
    )


@dataclasses.dataclass(frozen=True)
class Batch:
    iteration: int
    replica: int
    uids: tuple[str, ...]


class _DatasetStream:
    """Per-(dataset, replica) sampler: videos cycle through fresh
    permutations, queries draw without replacement within a video."""

    def __init__(self, videos: Sequence[Sequence[str]], seed: int,
                 dataset_index: int, replica: int) -> None:
        seq = np.random.SeedSequence(entropy=seed,
                                     spawn_key=(dataset_index, replica))
        self._rng = np.random.Generator(np.random.Philox(seq))
        self._videos = videos
        self._pool: np.ndarray = np.empty(0, dtype=np.int64)
        self._pos = 0

    def _next_video(self) -> int:
        if self._pos >= len(self._pool):
            self._pool = self._rng.permutation(len(self._videos))
            self._pos = 0
        video = int(self._pool[self._pos])
        self._pos += 1
        return video

    def draw(self, videos_per_dataset: int, queries_per_video: int) -> list[str]:
        uids: list[str] = []
        for _ in range(videos_per_dataset):
            queries = self._videos[self._next_video()]
            if len(queries) >= queries_per_video:
                picks = self._rng.choice(len(queries), size=queries_per_video,
                                         replace=False)
            else:
                picks = self._rng.integers(0, len(queries),
                                           size=queries_per_video)
            uids.extend(queries[int(i)] for i in picks)
        return uids


def _group_by_video(records: Iterable[CanonicalRecord],
                    ) -> dict[str, list[list[str]]]:
    """dataset -> per-video uid lists, in corpus first-appearance order;
    train split only."""
    grouped: dict[str, dict[str, list[str]]] = {}
    for record in records:
        if record.split != "train":
            continue
        videos = grouped.setdefault(record.dataset, {})
        videos.setdefault(record.video.video_id, []).append(record.uid)
    return {dataset: list(videos.values())
            for dataset, videos in grouped.items()}


def build_epoch(plan: SamplingPlan, corpus: Sequence[CanonicalRecord],
                iterations: int) -> Iterator[Batch]:
    """Deterministic stream of balanced batches.

    Yields iterations × replicas batches, iteration-major.  Raises
    InsufficientCorpusError before yielding anything when a dataset
    cannot fill its quota.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    grouped = _group_by_video(corpus)
    for dataset in plan.datasets:
        have = len(grouped.get(dataset, ()))
        if have < plan.videos_per_dataset:
            raise InsufficientCorpusError(
                f"insufficient corpus: dataset {dataset!r} has {have} "
                f"train videos, need {plan.videos_per_dataset}")
    streams = {
        (d_idx, replica): _DatasetStream(grouped[dataset], plan.seed,
                                         d_idx, replica)
        for d_idx, dataset in enumerate(plan.datasets)
        for replica in range(plan.replicas)
    }
    return _emit(plan, streams, iterations)


def _emit(plan: SamplingPlan,
          streams: dict[tuple[int, int], _DatasetStream],
          iterations: int) -> Iterator[Batch]:
    for iteration in range(iterations):
        for replica in range(plan.replicas):
            uids: list[str] = []
            for d_idx in range(len(plan.datasets)):
                uids.extend(streams[d_idx, replica].draw(
                    plan.videos_per_dataset, plan.queries_per_video))
            yield Batch(iteration=iteration, replica=replica,
                        uids=tuple(uids))


def merge_corpora(parts: Iterable[Sequence[CanonicalRecord]],
                  ) -> list[CanonicalRecord]:
    """Concatenate record lists, drop duplicate uids (first wins), and
    order by (dataset, video_id, start)."""
    seen: dict[str, CanonicalRecord] = {}
    for part in parts:
        for record in part:
            seen.setdefault(record.uid, record)
    return sorted(seen.values(),
                  key=lambda r: (r.dataset, r.video.video_id, r.span.start))


def export_batches(batches: Iterable[Batch], sink: IO[str]) -> int:
    """Write the line-delimited batch manifest; returns lines written."""
    count = 0
    for batch in batches:
        line = json.dumps({"iter": batch.iteration, "replica": batch.replica,
                           "uids": list(batch.uids)})
        sink.write(line + "\n")
        count += 1
    return count


def read_batches(lines: Iterable[str]) -> list[Batch]:
    """Parse a batch manifest written by export_batches."""
    batches: list[Batch] = []
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"batch manifest line {number}: "
                             f"not valid JSON: {exc}") from exc
        try:
            batches.append(Batch(iteration=int(doc["iter"]),
                                 replica=int(doc["replica"]),
                                 uids=tuple(str(u) for u in doc["uids"])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"batch manifest line {number}: "
                             f"missing field: {exc}") from exc
    return batches
