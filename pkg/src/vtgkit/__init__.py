"""Toolkit for video temporal grounding pipelines: corpus ingest and
canonicalization, query unification, balanced batch sampling, a
similarity grounder over precomputed features, recall evaluation and
compute-cost accounting."""

from .core import (CONVENTIONS, LONG_FORM, PRETRAIN_DATASETS, SHORT_FORM,
                   TARGET_DATASETS, BenchmarkConvention, DatasetInfo,
                   SpanError, TimeSpan, VideoMeta, dataset_info,
                   normalize_dataset_id)

__version__ = "0.1.0"

__all__ = [
    "CONVENTIONS",
    "LONG_FORM",
    "PRETRAIN_DATASETS",
    "SHORT_FORM",
    "TARGET_DATASETS",
    "BenchmarkConvention",
    "DatasetInfo",
    "SpanError",
    "TimeSpan",
    "VideoMeta",
    "__version__",
    "dataset_info",
    "normalize_dataset_id",
]
