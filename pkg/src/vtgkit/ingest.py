"""Annotation adapters and the canonical line-delimited corpus format.

Adapters parse the community-distributed annotation layouts (Charades-STA
line grammar, dense-caption maps, nested clip/query JSON) plus a generic
flat JSONL fallback, into RawAnnotation lists with per-line rejection
records.  canonicalize() then clips spans, assigns stable uids and emits
CanonicalRecords ready for the rest of the pipeline.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Mapping

from .core import (SpanError, TimeSpan, VideoMeta, dataset_info,
                   normalize_dataset_id)

SPLITS = ("train", "val", "test")

CANONICAL_FIELDS = ("uid", "dataset", "video_id", "duration", "start", "end",
                    "raw_query", "unified_query", "perspective", "split")


class IngestError(ValueError):
    """Fatal ingest failure (structurally unusable input)."""


@dataclass(frozen=True)
class Rejection:
    """One discarded input item: where it came from and why."""

    source: str
    reason: str


@dataclass(frozen=True)
class RawAnnotation:
    dataset: str
    video_id: str
    span: TimeSpan
    query_text: str
    split: str = "train"
    duration: float | None = None       # known only for some adapters
    unified_query: str | None = None    # carried through the generic format

    def __post_init__(self):
        object.__setattr__(self, "dataset", normalize_dataset_id(self.dataset))
        if not self.query_text.strip():
            raise ValueError("query_text must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass(frozen=True)
class CanonicalRecord:
    uid: str
    dataset: str
    video: VideoMeta
    span: TimeSpan
    raw_query: str
    unified_query: str | None
    perspective: str
    split: str


def record_uid(dataset: str, video_id: str, span: TimeSpan,
               raw_query: str) -> str:
    """Deterministic 64-bit content id.

    Endpoints are rounded to milliseconds first so serialization round
    trips cannot shift the hash.
    """
    start_ms = round(span.start * 1000.0)
    end_ms = round(span.end * 1000.0)
    payload = f"{dataset}\x1f{video_id}\x1f{start_ms}\x1f{end_ms}\x1f{raw_query}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# adapters


def parse_charades_sta(lines: Iterable[str], split: str = "train"
                       ) -> tuple[list[RawAnnotation], list[Rejection]]:
    """Parse `VIDEO_ID START END##sentence` lines.

    Malformed lines become Rejection records; the parse is fatal only when
    candidate lines exist and none of them parse.
    """
    records: list[RawAnnotation] = []
    rejections: list[Rejection] = []
    candidates = 0
    for lineno, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line:
            continue
        candidates += 1
        where = f"line {lineno}"
        if "##" not in line:
            rejections.append(Rejection(where, "missing '##' separator"))
            continue
        info, query = line.split("##", 1)
        parts = info.split()
        if len(parts) != 3:
            rejections.append(Rejection(where, "expected VIDEO_ID START END"))
            continue
        video_id, s_text, e_text = parts
        try:
            start, end = float(s_text), float(e_text)
        except ValueError:
            rejections.append(Rejection(where, "non-numeric timestamp"))
            continue
        if end < start:
            rejections.append(Rejection(where, "start>end"))
            continue
        if start < 0:
            rejections.append(Rejection(where, "negative start"))
            continue
        if not query.strip():
            rejections.append(Rejection(where, "empty query"))
            continue
        records.append(RawAnnotation(dataset="charades-sta", video_id=video_id,
                                     span=TimeSpan(start, end),
                                     query_text=query.strip(), split=split))
    if candidates and not records:
        raise IngestError("no Charades-STA lines parsed; first problem: "
                          f"{rejections[0].source}: {rejections[0].reason}")
    return records, rejections


def parse_dense_caption_json(doc: str | Mapping, dataset: str,
                             split: str = "train"
                             ) -> tuple[list[RawAnnotation], list[Rejection]]:
    """Parse a video_id -> {timestamps, sentences, duration|fps} map.

    Frame-indexed corpora carry `fps` (and usually `num_frames`); their
    timestamps are divided by fps.  Parallel-array mismatches reject the
    whole video.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise IngestError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise IngestError("dense-caption document must be a JSON object")
    dataset = normalize_dataset_id(dataset)
    records: list[RawAnnotation] = []
    rejections: list[Rejection] = []
    for video_id in doc:
        entry = doc[video_id]
        if not isinstance(entry, Mapping):
            rejections.append(Rejection(video_id, "entry not an object"))
            continue
        fps = entry.get("fps")
        duration = entry.get("duration")
        if fps is not None:
            scale = 1.0 / float(fps)
            if duration is None and entry.get("num_frames") is not None:
                duration = float(entry["num_frames"]) * scale
        else:
            scale = 1.0
        if duration is None:
            rejections.append(Rejection(video_id, "missing duration"))
            continue
        stamps = entry.get("timestamps")
        sents = entry.get("sentences")
        if not isinstance(stamps, list) or not isinstance(sents, list):
            rejections.append(Rejection(video_id, "missing timestamps/sentences"))
            continue
        if len(stamps) != len(sents):
            rejections.append(Rejection(video_id, "parallel array mismatch"))
            continue
        for idx, (pair, sent) in enumerate(zip(stamps, sents)):
            where = f"{video_id}[{idx}]"
            if (not isinstance(pair, (list, tuple))) or len(pair) != 2:
                rejections.append(Rejection(where, "timestamp not a pair"))
                continue
            try:
                start = float(pair[0]) * scale
                end = float(pair[1]) * scale
            except (TypeError, ValueError):
                rejections.append(Rejection(where, "non-numeric timestamp"))
                continue
            if end < start:
                rejections.append(Rejection(where, "start>end"))
                continue
            if start < 0:
                rejections.append(Rejection(where, "negative start"))
                continue
            if not str(sent).strip():
                rejections.append(Rejection(where, "empty query"))
                continue
            records.append(RawAnnotation(
                dataset=dataset, video_id=video_id, span=TimeSpan(start, end),
                query_text=str(sent).strip(), split=split,
                duration=float(duration)))
    return records, rejections


@dataclass(frozen=True)
class NlqFieldMap:
    """Key names for the nested clip/query schema; override per corpus."""

    videos: str = "videos"
    clips: str = "clips"
    clip_uid: str = "clip_uid"
    annotations: str = "annotations"
    queries: str = "language_queries"
    text: str = "query"
    start: str = "clip_start_sec"
    end: str = "clip_end_sec"
    duration: str = "clip_duration_sec"

    @classmethod
    def from_json(cls, doc: str | Mapping) -> "NlqFieldMap":
        if isinstance(doc, str):
            doc = json.loads(doc)
        allowed = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(doc) - allowed
        if unknown:
            raise IngestError(f"unknown field-map keys: {sorted(unknown)}")
        return cls(**doc)


def parse_nlq_json(doc: str | Mapping, dataset: str = "ego4d-nlq",
                   split: str = "train",
                   field_map: NlqFieldMap = NlqFieldMap()
                   ) -> tuple[list[RawAnnotation], list[Rejection]]:
    """Flatten the nested videos -> clips -> annotations -> queries schema.

    Structural problems (missing top-level list) are fatal; per-query field
    absence is not.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise IngestError(f"not valid JSON: {exc}") from exc
    fm = field_map
    videos = doc.get(fm.videos) if isinstance(doc, Mapping) else None
    if not isinstance(videos, list):
        raise IngestError(f"missing top-level {fm.videos!r} list")
    dataset = normalize_dataset_id(dataset)
    records: list[RawAnnotation] = []
    rejections: list[Rejection] = []
    for video in videos:
        for clip in video.get(fm.clips, []) or []:
            clip_uid = str(clip.get(fm.clip_uid, "")).strip()
            if not clip_uid:
                rejections.append(Rejection("clip", f"missing {fm.clip_uid}"))
                continue
            duration = clip.get(fm.duration)
            duration = float(duration) if duration is not None else None
            for ann in clip.get(fm.annotations, []) or []:
                for qi, lq in enumerate(ann.get(fm.queries, []) or []):
                    where = f"{clip_uid}[{qi}]"
                    text = str(lq.get(fm.text) or "").strip()
                    if not text:
                        rejections.append(Rejection(where, "empty query"))
                        continue
                    start = lq.get(fm.start)
                    end = lq.get(fm.end)
                    if start is None or end is None:
                        rejections.append(Rejection(where, "missing span fields"))
                        continue
                    start, end = float(start), float(end)
                    if end < start:
                        rejections.append(Rejection(where, "start>end"))
                        continue
                    if start < 0:
                        rejections.append(Rejection(where, "negative start"))
                        continue
                    records.append(RawAnnotation(
                        dataset=dataset, video_id=clip_uid,
                        span=TimeSpan(start, end), query_text=text,
                        split=split, duration=duration))
    return records, rejections


def parse_generic_jsonl(lines: Iterable[str]
                        ) -> tuple[list[RawAnnotation], list[Rejection]]:
    """Parse the flat one-record-per-line fallback format.

    Required fields: dataset, video_id, duration, start, end, query (or
    raw_query), split.  unified_query is carried through when present, so
    files written by write_canonical round-trip.
    """
    records: list[RawAnnotation] = []
    rejections: list[Rejection] = []
    for lineno, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line:
            continue
        where = f"line {lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            rejections.append(Rejection(where, "not valid JSON"))
            continue
        if not isinstance(obj, dict):
            rejections.append(Rejection(where, "not an object"))
            continue
        query = obj.get("query", obj.get("raw_query"))
        missing = [k for k in ("dataset", "video_id", "duration", "start",
                               "end", "split") if obj.get(k) is None]
        if query is None:
            missing.append("query")
        if missing:
            rejections.append(Rejection(where, f"missing field {missing[0]}"))
            continue
        try:
            span = TimeSpan(float(obj["start"]), float(obj["end"]))
        except (SpanError, TypeError, ValueError):
            rejections.append(Rejection(where, "start>end"))
            continue
        try:
            records.append(RawAnnotation(
                dataset=str(obj["dataset"]), video_id=str(obj["video_id"]),
                span=span, query_text=str(query), split=str(obj["split"]),
                duration=float(obj["duration"]),
                unified_query=obj.get("unified_query")))
        except ValueError as exc:
            rejections.append(Rejection(where, str(exc)))
    return records, rejections


# ---------------------------------------------------------------------------
# canonicalization and corpus I/O


@dataclass
class IngestResult:
    records: list[CanonicalRecord]
    rejections: list[Rejection]
    clipped: int = 0
    warnings: list[Rejection] = field(default_factory=list)


def canonicalize(raws: Iterable[RawAnnotation],
                 durations: Mapping[str, float] | None = None,
                 prior_rejections: Iterable[Rejection] = ()) -> IngestResult:
    """Turn raw annotations into CanonicalRecords.

    Durations come from the annotation itself when the adapter knew them,
    else from the sidecar mapping.  Spans overhanging the video end are
    clipped and counted; spans fully outside or zero-length are rejected;
    duplicate uids keep the first occurrence.
    """
    durations = durations or {}
    result = IngestResult(records=[], rejections=list(prior_rejections))
    seen: set[str] = set()
    for raw in raws:
        where = f"{raw.video_id}@{raw.span.start:g}"
        duration = raw.duration
        if duration is None:
            duration = durations.get(raw.video_id)
        if duration is None:
            result.rejections.append(Rejection(where, "missing duration"))
            continue
        if duration <= 0:
            result.rejections.append(Rejection(where, "nonpositive duration"))
            continue
        if raw.span.degenerate:
            result.rejections.append(Rejection(where, "degenerate span"))
            continue
        video = VideoMeta(raw.video_id, duration, raw.dataset)
        if raw.span.start >= video.duration:
            result.rejections.append(Rejection(where, "span outside video"))
            continue
        span = raw.span
        if span.end > video.duration:
            span = TimeSpan(span.start, video.duration)
            result.clipped += 1
        uid = record_uid(raw.dataset, raw.video_id, span, raw.query_text)
        if uid in seen:
            result.rejections.append(Rejection(where, "duplicate uid"))
            continue
        seen.add(uid)
        unified = raw.unified_query
        if unified is not None:
            from .unify import validate_canonical
            ok, reasons = validate_canonical(unified)
            if not ok:
                result.warnings.append(
                    Rejection(where, f"unified_query fails validation: "
                                     f"{','.join(reasons)}"))
        result.records.append(CanonicalRecord(
            uid=uid, dataset=raw.dataset, video=video, span=span,
            raw_query=raw.query_text, unified_query=unified,
            perspective=dataset_info(raw.dataset).perspective,
            split=raw.split))
    return result


def _round3(x: float) -> float:
    return round(float(x), 3)


def record_to_json(rec: CanonicalRecord) -> str:
    obj = {
        "uid": rec.uid,
        "dataset": rec.dataset,
        "video_id": rec.video.video_id,
        "duration": _round3(rec.video.duration),
        "start": _round3(rec.span.start),
        "end": _round3(rec.span.end),
        "raw_query": rec.raw_query,
        "unified_query": rec.unified_query,
        "perspective": rec.perspective,
        "split": rec.split,
    }
    return json.dumps(obj, ensure_ascii=False)


def write_canonical(records: Iterable[CanonicalRecord], sink: IO[str]) -> int:
    """Write the canonical corpus format; duplicate uids are dropped after
    the first occurrence.  Returns the number of lines written."""
    seen: set[str] = set()
    written = 0
    for rec in records:
        if rec.uid in seen:
            continue
        seen.add(rec.uid)
        sink.write(record_to_json(rec) + "\n")
        written += 1
    return written


def read_canonical(lines: Iterable[str]) -> list[CanonicalRecord]:
    """Read a canonical corpus file back into records.

    Strict: every canonical field must be present; the stored uid must
    match the recomputed one.
    """
    out: list[CanonicalRecord] = []
    for lineno, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {lineno}: not valid JSON: {exc}") from exc
        missing = [k for k in CANONICAL_FIELDS
                   if k != "unified_query" and k not in obj]
        if missing:
            raise IngestError(f"line {lineno}: missing field {missing[0]}")
        span = TimeSpan(float(obj["start"]), float(obj["end"]))
        video = VideoMeta(str(obj["video_id"]), float(obj["duration"]),
                          normalize_dataset_id(str(obj["dataset"])))
        rec = CanonicalRecord(
            uid=str(obj["uid"]), dataset=video.dataset, video=video, span=span,
            raw_query=str(obj["raw_query"]),
            unified_query=obj.get("unified_query"),
            perspective=str(obj["perspective"]), split=str(obj["split"]))
        expect = record_uid(rec.dataset, video.video_id, span, rec.raw_query)
        if rec.uid != expect:
            raise IngestError(
                f"line {lineno}: uid {rec.uid} does not match content hash")
        out.append(rec)
    return out


def read_duration_index(lines: Iterable[str]) -> dict[str, float]:
    """Sidecar of {"video_id": ..., "duration": ...} JSON lines."""
    out: dict[str, float] = {}
    for lineno, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            out[str(obj["video_id"])] = float(obj["duration"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"duration index line {lineno}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# statistics


@dataclass
class DatasetStats:
    videos: int = 0
    queries: int = 0
    mean_video_s: float = 0.0
    mean_segment_s: float = 0.0


@dataclass
class CorpusStats:
    per_dataset: dict[str, DatasetStats]
    rejected: Counter
    clipped: int

    @property
    def accepted(self) -> int:
        return sum(d.queries for d in self.per_dataset.values())

    @property
    def parsed(self) -> int:
        return self.accepted + sum(self.rejected.values())


def corpus_stats(records: Iterable[CanonicalRecord],
                 rejections: Iterable[Rejection] = (),
                 clipped: int = 0) -> CorpusStats:
    """Per-dataset video/query counts and mean durations.

    Video means are over distinct videos; segment means over queries.
    """
    videos: dict[str, dict[str, float]] = {}
    seg_sum: Counter = Counter()
    seg_n: Counter = Counter()
    for rec in records:
        videos.setdefault(rec.dataset, {})[rec.video.video_id] = \
            rec.video.duration
        seg_sum[rec.dataset] += rec.span.length
        seg_n[rec.dataset] += 1
    per_dataset = {}
    for ds in sorted(seg_n):
        vids = videos[ds]
        per_dataset[ds] = DatasetStats(
            videos=len(vids),
            queries=int(seg_n[ds]),
            mean_video_s=sum(vids.values()) / len(vids),
            mean_segment_s=seg_sum[ds] / seg_n[ds])
    return CorpusStats(per_dataset=per_dataset,
                       rejected=Counter(r.reason for r in rejections),
                       clipped=int(clipped))


def render_stats(stats: CorpusStats, fmt: str = "aligned-text") -> str:
    from .tables import render_table
    headers = ["dataset", "videos", "queries", "avg_video_s", "avg_segment_s"]
    rows = [[ds, str(d.videos), str(d.queries), f"{d.mean_video_s:.1f}",
             f"{d.mean_segment_s:.1f}"]
            for ds, d in stats.per_dataset.items()]
    return render_table(headers, rows, fmt)


def filter_split(records: Iterable[CanonicalRecord],
                 split: str) -> list[CanonicalRecord]:
    return [r for r in records if r.split == split]


def with_unified(rec: CanonicalRecord, unified: str) -> CanonicalRecord:
    return replace(rec, unified_query=unified)
