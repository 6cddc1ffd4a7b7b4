"""Time spans, video metadata and dataset conventions.

Everything downstream (ingest, sampling, grounding, evaluation) speaks in
terms of the types defined here.  Spans are continuous real-valued second
intervals; nothing in the core snaps to a frame grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class SpanError(ValueError):
    """Invalid span construction or placement."""


@dataclass(frozen=True, order=True)
class TimeSpan:
    """Closed interval [start, end] in seconds; zero length is allowed."""

    start: float
    end: float

    def __post_init__(self):
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "end", float(self.end))
        if not (self.start >= 0.0):
            raise SpanError(f"span start must be >= 0, got {self.start}")
        if self.end < self.start:
            raise SpanError(f"span end {self.end} precedes start {self.start}")

    @property
    def length(self) -> float:
        return self.end - self.start

    @property
    def center(self) -> float:
        return 0.5 * (self.start + self.end)

    @property
    def degenerate(self) -> bool:
        return self.end == self.start


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    duration: float
    dataset: str

    def __post_init__(self):
        object.__setattr__(self, "duration", float(self.duration))
        if not self.video_id:
            raise ValueError("video_id must be non-empty")
        if not (self.duration > 0.0):
            raise ValueError(f"duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class BenchmarkConvention:
    """Recall reporting convention: which IoU thresholds and ranks a
    benchmark tabulates."""

    iou_thresholds: tuple[float, ...]
    ranks: tuple[int, ...] = (1, 5)

    def __post_init__(self):
        ths = tuple(float(t) for t in self.iou_thresholds)
        if not ths or any(not (0.0 < t <= 1.0) for t in ths):
            raise ValueError(f"thresholds must lie in (0, 1], got {ths}")
        if tuple(sorted(ths)) != ths:
            raise ValueError("thresholds must be ascending")
        object.__setattr__(self, "iou_thresholds", ths)
        object.__setattr__(self, "ranks", tuple(int(k) for k in self.ranks))
        if any(k < 1 for k in self.ranks):
            raise ValueError("ranks must be >= 1")


#: Long-form convention: videos in the several-minute range and up.
LONG_FORM = BenchmarkConvention(iou_thresholds=(0.3, 0.5))
#: Short-form convention: clip-scale videos.
SHORT_FORM = BenchmarkConvention(iou_thresholds=(0.5, 0.7))

CONVENTIONS = {"long": LONG_FORM, "short": SHORT_FORM}


@dataclass(frozen=True)
class DatasetInfo:
    """Registry entry for a dataset id.

    stage is the training stage the corpus belongs to: "pretrain" for the
    large weakly-labelled corpora, "target" for the evaluation benchmarks,
    "custom" otherwise.
    """

    dataset_id: str
    stage: str
    perspective: str  # "ego" | "exo"
    convention: BenchmarkConvention = field(default=LONG_FORM)

    def __post_init__(self):
        if self.perspective not in ("ego", "exo"):
            raise ValueError(f"perspective must be ego|exo, got {self.perspective}")
        if self.stage not in ("pretrain", "target", "custom"):
            raise ValueError(f"unknown stage {self.stage}")


def _registry() -> dict[str, DatasetInfo]:
    pre = [
        ("naq", "ego", LONG_FORM),
        ("momentor", "exo", LONG_FORM),
        ("coin", "exo", LONG_FORM),
        ("youcook2", "exo", LONG_FORM),
        ("hirest", "exo", LONG_FORM),
    ]
    tgt = [
        ("goalstep", "ego", LONG_FORM),
        ("ego4d-nlq", "ego", LONG_FORM),
        ("tacos", "exo", LONG_FORM),
        ("charades-sta", "exo", SHORT_FORM),
        ("activitynet-captions", "exo", SHORT_FORM),
    ]
    reg = {}
    for did, persp, conv in pre:
        reg[did] = DatasetInfo(did, "pretrain", persp, conv)
    for did, persp, conv in tgt:
        reg[did] = DatasetInfo(did, "target", persp, conv)
    return reg


_REGISTRY = _registry()

_ALIASES = {
    "nlq": "ego4d-nlq",
    "ego4d_nlq": "ego4d-nlq",
    "charades_sta": "charades-sta",
    "charades": "charades-sta",
    "activitynet": "activitynet-captions",
    "activitynet_captions": "activitynet-captions",
    "anet-cap": "activitynet-captions",
    "goal_step": "goalstep",
}

PRETRAIN_DATASETS = ("naq", "momentor", "coin", "youcook2", "hirest")
TARGET_DATASETS = ("goalstep", "ego4d-nlq", "tacos", "charades-sta",
                   "activitynet-captions")


def normalize_dataset_id(name: str) -> str:
    """Map a dataset name or alias onto its canonical lowercase id.

    Unknown names pass through lowercased; they behave as custom datasets.
    """
    key = name.strip().lower()
    return _ALIASES.get(key, key)


def dataset_info(name: str) -> DatasetInfo:
    """Look up registry metadata; unknown ids get custom exo/long defaults."""
    did = normalize_dataset_id(name)
    if not did:
        raise ValueError("dataset id must be non-empty")
    try:
        return _REGISTRY[did]
    except KeyError:
        return DatasetInfo(did, "custom", "exo", LONG_FORM)


def span_length(s: TimeSpan) -> float:
    return s.end - s.start


def intersection_length(a: TimeSpan, b: TimeSpan) -> float:
    """Overlap in seconds; 0 when the spans only touch at an endpoint."""
    return max(0.0, min(a.end, b.end) - max(a.start, b.start))


def enclosing_length(a: TimeSpan, b: TimeSpan) -> float:
    """Length of the smallest interval containing both spans."""
    return max(a.end, b.end) - min(a.start, b.start)


def clip_to_video(s: TimeSpan, video: VideoMeta) -> TimeSpan:
    """Clip a span to [0, duration].

    A span starting at or past the end of the video has no valid clipped
    form and raises SpanError.
    """
    if s.start >= video.duration:
        raise SpanError(
            f"span [{s.start}, {s.end}] fully outside video "
            f"{video.video_id} of duration {video.duration}")
    return TimeSpan(s.start, min(s.end, video.duration))
