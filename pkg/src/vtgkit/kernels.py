"""Reference loss kernels: focal classification loss, 1-D distance-IoU
regression loss, and their weighted combination.

These are scalar float64 oracles with closed-form derivatives, meant for
verifying external training code, not for hot loops.  At non-differentiable
boundary alignments the one-sided right derivative is returned, except at
the exact minimum pred == gt where the canonical subgradient (0, 0) is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import TimeSpan, enclosing_length, intersection_length, span_length


@dataclass(frozen=True)
class LossWeights:
    lambda_cls: float = 1.0
    lambda_reg: float = 1.0

    def __post_init__(self):
        for name in ("lambda_cls", "lambda_reg"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and non-negative")


@dataclass(frozen=True)
class FocalParams:
    alpha: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "gamma", float(self.gamma))
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


def focal_loss(p: float, target: int, params: FocalParams = FocalParams()
               ) -> tuple[float, float]:
    """Focal loss -alpha * (1 - p_t)^gamma * ln(p_t) and d/dp.

    p is the predicted foreground probability; p_t = p for target 1 and
    1 - p for target 0.  gamma = 0 reduces exactly to scaled cross-entropy.
    """
    if target not in (0, 1):
        raise ValueError(f"target must be 0 or 1, got {target}")
    p = float(p)
    p_t = p if target == 1 else 1.0 - p
    if p_t <= 0.0:
        raise ValueError("log of nonpositive p_t")
    a, g = params.alpha, params.gamma
    log_pt = math.log(p_t)
    one_minus = 1.0 - p_t
    loss = -a * one_minus ** g * log_pt

    # dL/dp_t, then chain through dp_t/dp = +1 or -1.
    if g == 0.0:
        dl_dpt = -a / p_t
    elif one_minus == 0.0:
        # limit of g*(1-pt)^(g-1)*ln(pt) - (1-pt)^g/pt as pt -> 1 is 0 for g > 0
        dl_dpt = 0.0
    else:
        dl_dpt = a * (g * one_minus ** (g - 1.0) * log_pt - one_minus ** g / p_t)
    dl_dp = dl_dpt if target == 1 else -dl_dpt
    return loss, dl_dp


def _relu_right_deriv(value: float, dvalue: float) -> float:
    """Right derivative of max(0, f) given f and f' at the point."""
    if value > 0.0:
        return dvalue
    if value == 0.0:
        return max(dvalue, 0.0)
    return 0.0


def diou_1d(pred: TimeSpan, gt: TimeSpan) -> float:
    """Distance-IoU of two intervals: IoU - d^2/c^2.

    d is the center distance and c the enclosing length.  Defined as 1
    when both spans are the same degenerate point (c = 0).
    """
    c = enclosing_length(pred, gt)
    if c == 0.0:
        return 1.0
    inter = intersection_length(pred, gt)
    union = span_length(pred) + span_length(gt) - inter
    iou = inter / union if union > 0.0 else 0.0
    d = pred.center - gt.center
    return iou - (d * d) / (c * c)


def diou_loss(pred: TimeSpan, gt: TimeSpan
              ) -> tuple[float, tuple[float, float]]:
    """1 - diou_1d with the analytic gradient wrt (pred.start, pred.end)."""
    if pred == gt:
        return 0.0, (0.0, 0.0)
    p1, p2 = pred.start, pred.end
    g1, g2 = gt.start, gt.end
    c = max(p2, g2) - min(p1, g1)
    if c == 0.0:
        return 0.0, (0.0, 0.0)

    inter_raw = min(p2, g2) - max(p1, g1)
    inter = max(0.0, inter_raw)
    union = (p2 - p1) + (g2 - g1) - inter
    iou = inter / union if union > 0.0 else 0.0

    # Right derivatives of the clamped intersection wrt pred endpoints.
    d_hi_p1 = 1.0 if p1 >= g1 else 0.0   # d max(p1,g1) / d p1
    d_lo_p2 = 1.0 if p2 < g2 else 0.0    # d min(p2,g2) / d p2
    di_dp1 = _relu_right_deriv(inter_raw, -d_hi_p1)
    di_dp2 = _relu_right_deriv(inter_raw, d_lo_p2)
    du_dp1 = -1.0 - di_dp1
    du_dp2 = 1.0 - di_dp2
    if union > 0.0:
        diou_dp1 = (di_dp1 * union - inter * du_dp1) / (union * union)
        diou_dp2 = (di_dp2 * union - inter * du_dp2) / (union * union)
    else:
        diou_dp1 = diou_dp2 = 0.0

    d = 0.5 * (p1 + p2) - 0.5 * (g1 + g2)
    dc_dp1 = -(1.0 if p1 < g1 else 0.0)  # d min(p1,g1) / d p1, right-sided
    dc_dp2 = 1.0 if p2 >= g2 else 0.0    # d max(p2,g2) / d p2, right-sided
    # penalty = d^2 / c^2; d(d)/dp1 = d(d)/dp2 = 1/2
    dpen_dp1 = d / (c * c) - 2.0 * d * d * dc_dp1 / (c * c * c)
    dpen_dp2 = d / (c * c) - 2.0 * d * d * dc_dp2 / (c * c * c)

    loss = 1.0 - (iou - (d * d) / (c * c))
    grad = (-(diou_dp1 - dpen_dp1), -(diou_dp2 - dpen_dp2))
    return loss, grad


def total_loss(cls: float, reg: float, contrast: float,
               w: LossWeights = LossWeights()) -> float:
    """Weighted objective: lambda_cls * cls + lambda_reg * reg + contrast.

    The contrastive term is an externally computed scalar hook.
    """
    for name, v in (("cls", cls), ("reg", reg), ("contrast", contrast)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")
    return w.lambda_cls * cls + w.lambda_reg * reg + contrast
