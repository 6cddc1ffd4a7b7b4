import math
import random

import pytest

from vtgkit.core import TimeSpan
from vtgkit.kernels import (FocalParams, LossWeights, diou_1d, diou_loss,
                            focal_loss, total_loss)


def numeric_grad(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2 * h)


# ---------------------------------------------------------------------------
# focal


def test_focal_perfect_prediction_is_zero():
    loss, grad = focal_loss(1.0, 1, FocalParams(alpha=0.25, gamma=2.0))
    assert loss == 0.0
    assert grad == 0.0


def test_focal_hand_value():
    loss, _ = focal_loss(0.5, 1, FocalParams(alpha=0.25, gamma=2.0))
    assert loss == pytest.approx(0.25 * 0.25 * math.log(2.0), abs=1e-12)
    assert round(loss, 6) == 0.043322


def test_focal_gamma_zero_is_cross_entropy():
    rng = random.Random(5)
    params = FocalParams(alpha=1.0, gamma=0.0)
    for _ in range(1000):
        p = rng.uniform(1e-6, 1.0 - 1e-6)
        target = rng.randint(0, 1)
        p_t = p if target == 1 else 1.0 - p
        loss, _ = focal_loss(p, target, params)
        assert loss == pytest.approx(-math.log(p_t), abs=1e-12)


def test_focal_target_zero_mirrors_target_one():
    params = FocalParams(alpha=0.4, gamma=1.5)
    loss1, grad1 = focal_loss(0.3, 1, params)
    loss0, grad0 = focal_loss(0.7, 0, params)
    assert loss1 == pytest.approx(loss0, abs=1e-15)
    assert grad1 == pytest.approx(-grad0, abs=1e-15)


def test_focal_gradient_matches_numeric():
    rng = random.Random(11)
    params = FocalParams(alpha=0.25, gamma=2.0)
    for _ in range(200):
        p = rng.uniform(0.05, 0.95)
        target = rng.randint(0, 1)
        _, grad = focal_loss(p, target, params)
        num = numeric_grad(lambda x: focal_loss(x, target, params)[0], p)
        assert grad == pytest.approx(num, rel=1e-5, abs=1e-8)


def test_focal_monotone_decreasing_in_pt():
    params = FocalParams(alpha=0.25, gamma=2.0)
    values = [focal_loss(p, 1, params)[0]
              for p in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_focal_rejects_nonpositive_pt():
    with pytest.raises(ValueError, match="log of nonpositive"):
        focal_loss(0.0, 1)
    with pytest.raises(ValueError, match="log of nonpositive"):
        focal_loss(1.0, 0)
    with pytest.raises(ValueError):
        focal_loss(0.5, 2)


def test_focal_params_validation():
    with pytest.raises(ValueError):
        FocalParams(alpha=1.5)
    with pytest.raises(ValueError):
        FocalParams(gamma=-1.0)


# ---------------------------------------------------------------------------
# diou


def test_diou_identity():
    s = TimeSpan(3.0, 8.0)
    assert diou_1d(s, s) == 1.0
    loss, grad = diou_loss(s, s)
    assert loss == 0.0
    assert grad == (0.0, 0.0)


def test_diou_disjoint_hand_value():
    value = diou_1d(TimeSpan(0.0, 2.0), TimeSpan(4.0, 6.0))
    assert value == pytest.approx(-16.0 / 36.0, abs=1e-12)
    loss, _ = diou_loss(TimeSpan(0.0, 2.0), TimeSpan(4.0, 6.0))
    assert round(loss, 4) == 1.4444


def test_diou_overlap_hand_value():
    value = diou_1d(TimeSpan(0.0, 10.0), TimeSpan(5.0, 15.0))
    assert value == pytest.approx(1.0 / 3.0 - 25.0 / 225.0, abs=1e-12)
    loss, _ = diou_loss(TimeSpan(0.0, 10.0), TimeSpan(5.0, 15.0))
    assert round(loss, 4) == 0.7778


def test_diou_coincident_points():
    p = TimeSpan(4.0, 4.0)
    assert diou_1d(p, p) == 1.0


def test_diou_value_symmetric():
    a, b = TimeSpan(1.0, 7.0), TimeSpan(4.0, 12.0)
    assert diou_1d(a, b) == pytest.approx(diou_1d(b, a), abs=1e-12)


def test_diou_equals_iou_when_centers_coincide():
    a, b = TimeSpan(2.0, 8.0), TimeSpan(4.0, 6.0)
    assert a.center == b.center
    assert diou_1d(a, b) == pytest.approx(2.0 / 6.0, abs=1e-12)


def test_diou_translation_and_scale_invariance():
    rng = random.Random(3)
    for _ in range(200):
        a0, a1 = sorted(rng.uniform(0, 50) for _ in range(2))
        b0, b1 = sorted(rng.uniform(0, 50) for _ in range(2))
        base = diou_1d(TimeSpan(a0, a1), TimeSpan(b0, b1))
        shift = rng.uniform(0, 20)
        shifted = diou_1d(TimeSpan(a0 + shift, a1 + shift),
                          TimeSpan(b0 + shift, b1 + shift))
        assert shifted == pytest.approx(base, abs=1e-9)
        k = rng.uniform(0.1, 5.0)
        scaled = diou_1d(TimeSpan(k * a0, k * a1), TimeSpan(k * b0, k * b1))
        assert scaled == pytest.approx(base, abs=1e-9)


def test_diou_bounds():
    rng = random.Random(9)
    for _ in range(1000):
        a0, a1 = sorted(rng.uniform(0, 100) for _ in range(2))
        b0, b1 = sorted(rng.uniform(0, 100) for _ in range(2))
        if b1 == b0:
            continue
        value = diou_1d(TimeSpan(a0, a1), TimeSpan(b0, b1))
        assert -1.0 < value <= 1.0


def _away_from_kinks(p1, p2, g1, g2, margin=1e-3):
    gaps = (abs(p1 - g1), abs(p2 - g2), abs(p1 - g2), abs(p2 - g1),
            p2 - p1)
    return all(g > margin for g in gaps)


def test_diou_gradient_matches_central_differences():
    rng = random.Random(20240822)
    checked = 0
    while checked < 1000:
        p1, p2 = sorted(rng.uniform(0.5, 100) for _ in range(2))
        g1, g2 = sorted(rng.uniform(0.5, 100) for _ in range(2))
        if g2 - g1 < 1e-2 or not _away_from_kinks(p1, p2, g1, g2):
            continue
        gt = TimeSpan(g1, g2)
        _, (a1, a2) = diou_loss(TimeSpan(p1, p2), gt)
        n1 = numeric_grad(lambda x: diou_loss(TimeSpan(x, p2), gt)[0], p1,
                          h=1e-5)
        n2 = numeric_grad(lambda x: diou_loss(TimeSpan(p1, x), gt)[0], p2,
                          h=1e-5)
        scale1 = max(1.0, abs(a1), abs(n1))
        scale2 = max(1.0, abs(a2), abs(n2))
        assert abs(a1 - n1) / scale1 < 1e-5, (p1, p2, g1, g2, a1, n1)
        assert abs(a2 - n2) / scale2 < 1e-5, (p1, p2, g1, g2, a2, n2)
        checked += 1


def test_diou_gradient_descends():
    # one explicit gradient step must not increase the loss
    pred, gt = TimeSpan(10.0, 14.0), TimeSpan(20.0, 30.0)
    loss, (d1, d2) = diou_loss(pred, gt)
    step = 0.05
    moved = TimeSpan(pred.start - step * d1, pred.end - step * d2)
    assert diou_loss(moved, gt)[0] < loss


# ---------------------------------------------------------------------------
# combination


def test_total_loss_linear_combination():
    assert total_loss(0.5, 0.3, 0.2, LossWeights(1.0, 1.0)) == 1.0
    assert total_loss(0.5, 0.3, 0.0, LossWeights(2.0, 10.0)) == 4.0
    assert total_loss(9.0, 9.0, 0.7, LossWeights(0.0, 0.0)) == 0.7


def test_total_loss_default_weights_are_unit():
    w = LossWeights()
    assert (w.lambda_cls, w.lambda_reg) == (1.0, 1.0)


def test_total_loss_rejects_nonfinite():
    with pytest.raises(ValueError, match="finite"):
        total_loss(float("inf"), 0.0, 0.0)
    with pytest.raises(ValueError, match="finite"):
        total_loss(0.0, float("nan"), 0.0)


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(lambda_cls=-0.1)
    with pytest.raises(ValueError):
        LossWeights(lambda_reg=float("inf"))
