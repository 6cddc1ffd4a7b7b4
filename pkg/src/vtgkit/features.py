"""Binary I/O for precomputed frame features and query embeddings.

Layout: magic "VTGF", then little-endian u32 version, u32 frame count L,
u32 dimension D, f32 frames-per-second, then L*D float32 values row-major.
One file per video, named <video_id>.vtgf.  Query-embedding files reuse the
layout with L = number of queries plus a sidecar text index, one uid per
row, in row order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable

import numpy as np

MAGIC = b"VTGF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIf")


class FeatureFormatError(ValueError):
    """Malformed feature file; message carries the byte offset."""


@dataclass(frozen=True)
class FeatureSequence:
    video_id: str
    fps: float
    frames: np.ndarray  # L x D float32

    def __post_init__(self):
        object.__setattr__(self, "fps", float(self.fps))
        if self.fps <= 0.0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        f = np.asarray(self.frames, dtype=np.float32)
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise ValueError(f"frames must be a non-empty 2-D array, got shape {f.shape}")
        object.__setattr__(self, "frames", f)

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dim(self) -> int:
        return int(self.frames.shape[1])

    @property
    def duration(self) -> float:
        return self.num_frames / self.fps


@dataclass(frozen=True)
class QueryEmbedding:
    uid: str
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float32).reshape(-1)
        if v.size < 1:
            raise ValueError("vector must be non-empty")
        object.__setattr__(self, "vector", v)


def read_features(source: BinaryIO, video_id: str = "") -> FeatureSequence:
    """Read one feature file; errors report the exact failing byte offset."""
    head = source.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise FeatureFormatError(
            f"truncated header: {len(head)} of {_HEADER.size} bytes "
            f"(missing byte at offset {len(head)})")
    magic, version, n_frames, dim, fps = _HEADER.unpack(head)
    if magic != MAGIC:
        raise FeatureFormatError(f"bad magic {magic!r} at offset 0")
    if version != FORMAT_VERSION:
        raise FeatureFormatError(f"unsupported version {version} at offset 4")
    if n_frames == 0:
        raise FeatureFormatError("empty sequence (L = 0) at offset 8")
    if dim == 0:
        raise FeatureFormatError("zero dimension (D = 0) at offset 12")
    expected = n_frames * dim * 4
    payload = source.read(expected)
    if len(payload) < expected:
        raise FeatureFormatError(
            f"truncated payload: expected {expected} bytes for {n_frames}x{dim}, "
            f"got {len(payload)} (missing byte at offset {_HEADER.size + len(payload)})")
    extra = source.read(1)
    if extra:
        raise FeatureFormatError(
            f"payload size mismatch: trailing data at offset {_HEADER.size + expected}")
    frames = np.frombuffer(payload, dtype="<f4").reshape(n_frames, dim)
    return FeatureSequence(video_id=video_id, fps=fps, frames=frames.copy())


def write_features(seq: FeatureSequence, sink: BinaryIO) -> int:
    """Write one feature file; returns bytes written."""
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, seq.num_frames, seq.dim, seq.fps)
    body = np.ascontiguousarray(seq.frames, dtype="<f4").tobytes()
    sink.write(head)
    sink.write(body)
    return len(head) + len(body)


def read_query_embeddings(source: BinaryIO,
                          index_lines: Iterable[str]) -> list[QueryEmbedding]:
    """Read a query-embedding file plus its row->uid sidecar index."""
    seq = read_features(source, video_id="queries")
    uids = [ln.strip() for ln in index_lines if ln.strip()]
    if len(uids) != seq.num_frames:
        raise FeatureFormatError(
            f"index rows ({len(uids)}) do not match embeddings ({seq.num_frames})")
    return [QueryEmbedding(uid=u, vector=seq.frames[i])
            for i, u in enumerate(uids)]


def write_query_embeddings(embeddings: list[QueryEmbedding], sink: BinaryIO,
                           index_sink) -> int:
    if not embeddings:
        raise ValueError("no embeddings to write")
    mat = np.stack([e.vector for e in embeddings]).astype("<f4")
    seq = FeatureSequence(video_id="queries", fps=1.0, frames=mat)
    n = write_features(seq, sink)
    for e in embeddings:
        index_sink.write(e.uid + "\n")
    return n
