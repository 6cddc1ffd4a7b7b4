"""Compute-cost accounting.

Three cost sources: a registry of measured feature-extraction rates
(TFLOPs per minute of video), an analytic vision-transformer estimator
used only as a sanity cross-check, and a linear grounding-head model.
Methods without a linear model carry registered cost points at fixed
durations and refuse extrapolation.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from importlib import resources
from typing import IO

from .tables import render_table

# grounding head measured at 0.0865 TFLOPs over a 500 s video
DEFAULT_GROUNDING_COEFFICIENT = 0.0865 / 500

_BACKBONE_KINDS = ("image", "video")
_PROVENANCES = ("registered-from-paper", "estimated")
_FLOP_CONVENTIONS = ("macs", "flops")

_BACKBONE_ALIASES = {
    "pe-l": "perceptionencoder-l",
    "perception-encoder-l": "perceptionencoder-l",
    "clip": "clip-vit-l14",
    "clip-vit-l/14": "clip-vit-l14",
}


class CostError(ValueError):
    """Invalid cost query or malformed registry."""


@dataclasses.dataclass(frozen=True)
class BackboneSpec:
    """One feature backbone: measured extraction rate plus sampling info."""

    name: str
    kind: str
    sample_rate: float
    tflops_per_min: float
    provenance: str = "estimated"

    def __post_init__(self) -> None:
        if self.kind not in _BACKBONE_KINDS:
            raise CostError(f"unknown backbone kind {self.kind!r}")
        if self.provenance not in _PROVENANCES:
            raise CostError(f"unknown provenance {self.provenance!r}")
        if not self.sample_rate > 0:
            raise CostError("sample_rate must be positive")
        if not self.tflops_per_min > 0:
            raise CostError("tflops_per_min must be positive")


@dataclasses.dataclass(frozen=True)
class VitShape:
    image_side: int
    patch_side: int
    layers: int
    width: int
    mlp_width: int

    def __post_init__(self) -> None:
        for field in dataclasses.fields(self):
            if getattr(self, field.name) <= 0:
                raise CostError(f"{field.name} must be positive")
        if self.image_side % self.patch_side:
            raise CostError("image_side must be divisible by patch_side")

    @property
    def tokens(self) -> int:
        return (self.image_side // self.patch_side) ** 2 + 1


VIT_L14_336 = VitShape(image_side=336, patch_side=14, layers=24,
                       width=1024, mlp_width=4096)


@dataclasses.dataclass(frozen=True)
class CostEstimate:
    feature_tflops: float
    grounding_tflops: float
    total_tflops: float
    video_seconds: float

    def __post_init__(self) -> None:
        if self.total_tflops != self.feature_tflops + self.grounding_tflops:
            raise CostError("total must equal feature + grounding")


def load_registry(source: str | IO[str] | None = None) -> dict[str, BackboneSpec]:
    """Backbone registry keyed by lowercase name.

    ``source`` is a path or open text file; None loads the bundled
    defaults.
    """
    if source is None:
        text = (resources.files("vtgkit.data") / "backbones.json").read_text("utf-8")
    elif isinstance(source, str):
        with open(source, encoding="utf-8") as handle:
            text = handle.read()
    else:
        text = source.read()
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CostError(f"backbone registry is not valid JSON: {exc}") from exc
    if not isinstance(rows, list):
        raise CostError("backbone registry must be a JSON list")
    registry: dict[str, BackboneSpec] = {}
    for row in rows:
        try:
            spec = BackboneSpec(**row)
        except TypeError as exc:
            raise CostError(f"bad backbone entry {row!r}: {exc}") from exc
        registry[spec.name.lower()] = spec
    return registry


def get_backbone(name: str,
                 registry: Mapping[str, BackboneSpec] | None = None) -> BackboneSpec:
    if registry is None:
        registry = load_registry()
    key = name.strip().lower()
    key = _BACKBONE_ALIASES.get(key, key)
    try:
        return registry[key]
    except KeyError:
        known = ", ".join(sorted(registry))
        raise CostError(f"unknown backbone {name!r} (known: {known})") from None


def vit_flops_per_frame(shape: VitShape, convention: str = "macs") -> float:
    """Per-frame transformer cost from the usual attention + MLP matmuls.

    "macs" counts multiply-accumulates; "flops" doubles that.
    """
    if convention not in _FLOP_CONVENTIONS:
        raise CostError(f"unknown convention {convention!r}")
    n = shape.tokens
    w = shape.width
    per_layer = 4 * n * w * w + 2 * n * n * w + 2 * n * w * shape.mlp_width
    total = float(shape.layers * per_layer)
    return 2.0 * total if convention == "flops" else total


def feature_cost(spec: BackboneSpec, video_seconds: float) -> float:
    """TFLOPs to extract features for a video of the given length."""
    if video_seconds < 0:
        raise CostError("video_seconds must be nonnegative")
    return spec.tflops_per_min * video_seconds / 60.0


def grounding_cost(video_seconds: float,
                   coefficient: float = DEFAULT_GROUNDING_COEFFICIENT) -> float:
    """TFLOPs for the grounding head; linear in video length."""
    if not coefficient > 0:
        raise CostError("coefficient must be positive")
    if video_seconds < 0:
        raise CostError("video_seconds must be nonnegative")
    return coefficient * video_seconds


@dataclasses.dataclass(frozen=True)
class RegisteredPoint:
    """Measured cost at one duration; runtimes are annotations only."""

    feature_tflops: float
    grounding_tflops: float
    feature_runtime_s: float | None = None
    grounding_runtime_s: float | None = None
    total_runtime_s: float | None = None


@dataclasses.dataclass(frozen=True)
class MethodSpec:
    """Cost model for one method.

    Linear when ``backbone`` and ``grounding_coefficient`` are set;
    otherwise only the durations in ``registered_points`` are answerable.
    Parameter counts (billions) are annotations for report rendering.
    """

    name: str
    backbone: BackboneSpec | None = None
    grounding_coefficient: float | None = None
    registered_points: Mapping[float, RegisteredPoint] = \
        dataclasses.field(default_factory=dict)
    params_feature_b: float | None = None
    params_grounding_b: float | None = None

    def registered_at(self, video_seconds: float) -> RegisteredPoint | None:
        for seconds, point in self.registered_points.items():
            if math.isclose(seconds, video_seconds, rel_tol=1e-9, abs_tol=1e-9):
                return point
        return None


def unitime_method() -> MethodSpec:
    """UniTime carries measured points only; no linear model."""
    return MethodSpec(
        name="unitime",
        registered_points={
            500.0: RegisteredPoint(2184.0, 579.0, 72.1, 35.4, 107.6),
            900.0: RegisteredPoint(5384.0, 588.0, 154.6, 80.2, 234.8),
        },
        params_feature_b=0.68,
        params_grounding_b=7.61,
    )


def universalvtg_method(
        registry: Mapping[str, BackboneSpec] | None = None) -> MethodSpec:
    return MethodSpec(
        name="universalvtg",
        backbone=get_backbone("perceptionencoder-l", registry),
        grounding_coefficient=DEFAULT_GROUNDING_COEFFICIENT,
        registered_points={
            500.0: RegisteredPoint(175.0, 0.0865, 11.1, 0.0886, 11.2),
            900.0: RegisteredPoint(317.0, 0.155, 19.3, 0.0928, 19.4),
        },
        params_feature_b=0.32,
        params_grounding_b=0.06,
    )


def default_methods(
        registry: Mapping[str, BackboneSpec] | None = None) -> tuple[MethodSpec, ...]:
    return unitime_method(), universalvtg_method(registry)


def method_cost(method: MethodSpec, video_seconds: float) -> CostEstimate:
    """CostEstimate for one method, preferring the linear model and
    falling back to registered points at matching durations."""
    if method.backbone is not None and method.grounding_coefficient is not None:
        feat = feature_cost(method.backbone, video_seconds)
        ground = grounding_cost(video_seconds, method.grounding_coefficient)
        return CostEstimate(feat, ground, feat + ground, video_seconds)
    point = method.registered_at(video_seconds)
    if point is None:
        raise CostError(
            f"{method.name} at {video_seconds:g} s: "
            "no cost model; registered points only")
    total = point.feature_tflops + point.grounding_tflops
    return CostEstimate(point.feature_tflops, point.grounding_tflops,
                        total, video_seconds)


def compare_methods(methods: Sequence[MethodSpec],
                    video_seconds: float) -> dict[str, CostEstimate]:
    """Per-method cost at one duration, in input order."""
    out: dict[str, CostEstimate] = {}
    for method in methods:
        out[method.name] = method_cost(method, video_seconds)
    return out


def render_cost_table(estimates: Mapping[str, CostEstimate],
                      fmt: str = "aligned-text",
                      methods: Iterable[MethodSpec] = ()) -> str:
    """Delimited comparison table; runtime/parameter columns appear when
    the matching method annotations are available."""
    by_name = {m.name: m for m in methods}
    headers = ["method", "seconds", "feature_tflops", "grounding_tflops",
               "total_tflops"]
    notes = {name: _annotations_for(by_name.get(name), est)
             for name, est in estimates.items()}
    annotated = any(runtime is not None or params is not None
                    for runtime, params in notes.values())
    if annotated:
        headers += ["runtime_s", "params_b"]
    rows = []
    for name, est in estimates.items():
        row = [name, _fmt(est.video_seconds), _fmt(est.feature_tflops),
               _fmt(est.grounding_tflops), _fmt(est.total_tflops)]
        if annotated:
            runtime, params = notes[name]
            row += [_fmt(runtime) if runtime is not None else "--",
                    _fmt(params) if params is not None else "--"]
        rows.append(row)
    return render_table(headers, rows, fmt)


def _annotations_for(method: MethodSpec | None,
                     est: CostEstimate) -> tuple[float | None, float | None]:
    if method is None:
        return None, None
    point = method.registered_at(est.video_seconds)
    runtime = point.total_runtime_s if point is not None else None
    params = None
    if method.params_feature_b is not None \
            and method.params_grounding_b is not None:
        params = method.params_feature_b + method.params_grounding_b
    return runtime, params


def _fmt(value: float) -> str:
    return f"{value:.4g}"


@dataclasses.dataclass(frozen=True)
class UnifierModelCost:
    """Measured per-query unifier cost for one hosted model."""

    model: str
    prefill_s: float
    decode_s: float
    tflops_per_query: float


UNIFIER_MODEL_COSTS: dict[str, UnifierModelCost] = {
    "qwen3-4b": UnifierModelCost("qwen3-4b", 0.105, 0.340, 0.136),
    "qwen3-30b": UnifierModelCost("qwen3-30b", 0.333, 1.38, 0.84),
    "llama3.1-70b": UnifierModelCost("llama3.1-70b", 0.14, 0.891, 1.96),
}


def unifier_tflops_per_query(model: str) -> float | None:
    """Per-query TFLOPs for a registered unifier model, else None."""
    info = UNIFIER_MODEL_COSTS.get(model.strip().lower())
    return None if info is None else info.tflops_per_query
