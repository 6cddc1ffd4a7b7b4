import io
import struct

import numpy as np
import pytest

from vtgkit.features import (FORMAT_VERSION, MAGIC, FeatureFormatError,
                             FeatureSequence, QueryEmbedding, read_features,
                             read_query_embeddings, write_features,
                             write_query_embeddings)


def make_seq(n=8, d=4, fps=2.0, seed=0):
    rng = np.random.default_rng(seed)
    return FeatureSequence("vid", fps, rng.normal(size=(n, d)).astype(np.float32))


def test_round_trip_bytes_and_values():
    seq = make_seq(n=16, d=6, fps=1.88)
    buf = io.BytesIO()
    written = write_features(seq, buf)
    assert written == 20 + 16 * 6 * 4
    buf.seek(0)
    back = read_features(buf, video_id="vid")
    assert back.num_frames == 16
    assert back.dim == 6
    assert back.fps == pytest.approx(1.88)
    np.testing.assert_array_equal(back.frames, seq.frames)


def test_duration_from_frame_count():
    seq = make_seq(n=60, fps=2.0)
    assert seq.duration == 30.0


def test_sequence_validation():
    with pytest.raises(ValueError, match="fps"):
        FeatureSequence("v", 0.0, np.ones((2, 2), dtype=np.float32))
    with pytest.raises(ValueError, match="2-D"):
        FeatureSequence("v", 1.0, np.ones(3, dtype=np.float32))


def test_truncated_header_offset():
    with pytest.raises(FeatureFormatError, match=r"missing byte at offset 7"):
        read_features(io.BytesIO(b"VTGF\x01\x00\x00"))


def test_bad_magic_offset_zero():
    blob = b"XXXX" + b"\x00" * 16
    with pytest.raises(FeatureFormatError, match="bad magic .* at offset 0"):
        read_features(io.BytesIO(blob))


def test_unsupported_version_offset_four():
    head = struct.pack("<4sIIIf", MAGIC, 99, 1, 1, 1.0)
    with pytest.raises(FeatureFormatError,
                       match="unsupported version 99 at offset 4"):
        read_features(io.BytesIO(head + b"\x00" * 4))


def test_empty_sequence_offset_eight():
    head = struct.pack("<4sIIIf", MAGIC, FORMAT_VERSION, 0, 4, 1.0)
    with pytest.raises(FeatureFormatError, match=r"\(L = 0\) at offset 8"):
        read_features(io.BytesIO(head))


def test_zero_dimension_offset_twelve():
    head = struct.pack("<4sIIIf", MAGIC, FORMAT_VERSION, 4, 0, 1.0)
    with pytest.raises(FeatureFormatError, match=r"\(D = 0\) at offset 12"):
        read_features(io.BytesIO(head))


def test_truncated_payload_names_missing_byte():
    seq = make_seq(n=2, d=2)
    buf = io.BytesIO()
    write_features(seq, buf)
    blob = buf.getvalue()[:-3]  # drop 3 payload bytes
    with pytest.raises(FeatureFormatError,
                       match=rf"missing byte at offset {len(blob)}"):
        read_features(io.BytesIO(blob))


def test_trailing_data_rejected():
    seq = make_seq(n=2, d=2)
    buf = io.BytesIO()
    write_features(seq, buf)
    blob = buf.getvalue() + b"\x00"
    with pytest.raises(FeatureFormatError, match="payload size mismatch"):
        read_features(io.BytesIO(blob))


def test_payload_is_little_endian_row_major():
    frames = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    buf = io.BytesIO()
    write_features(FeatureSequence("v", 1.0, frames), buf)
    payload = buf.getvalue()[20:]
    assert payload == struct.pack("<4f", 1.0, 2.0, 3.0, 4.0)


def test_query_embeddings_round_trip():
    rng = np.random.default_rng(1)
    embs = [QueryEmbedding(f"uid{i}", rng.normal(size=8).astype(np.float32))
            for i in range(5)]
    blob, index = io.BytesIO(), io.StringIO()
    write_query_embeddings(embs, blob, index)
    blob.seek(0)
    back = read_query_embeddings(blob, io.StringIO(index.getvalue()))
    assert [e.uid for e in back] == [e.uid for e in embs]
    for a, b in zip(back, embs):
        np.testing.assert_array_equal(a.vector, b.vector)


def test_query_index_mismatch():
    rng = np.random.default_rng(2)
    embs = [QueryEmbedding(f"u{i}", rng.normal(size=4).astype(np.float32))
            for i in range(3)]
    blob, index = io.BytesIO(), io.StringIO()
    write_query_embeddings(embs, blob, index)
    blob.seek(0)
    with pytest.raises(FeatureFormatError, match="do not match"):
        read_query_embeddings(blob, io.StringIO("u0\nu1\n"))


def test_write_query_embeddings_requires_rows():
    with pytest.raises(ValueError):
        write_query_embeddings([], io.BytesIO(), io.StringIO())
