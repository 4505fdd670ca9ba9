"""Tests for Adam, LAMB, clipping, schedules and the EMA."""

import math

import numpy as np
import pytest

from src.core.exceptions import MissingGradientError, ShapeError
from src.models.fit import FitParams
from src.training import (
    EmaState,
    OptimizerMode,
    OptimizerState,
    clip_by_global_norm,
    cosine_lr,
    ema_decay,
    optimizer_update,
    trust_ratio,
)


def _params(**arrays):
    return FitParams({k: np.asarray(v, dtype=np.float32) for k, v in arrays.items()})


def test_adam_three_steps_by_hand():
    """Test three Adam steps against the textbook recurrences."""
    params = _params(w=[1.0, -2.0])
    opt = OptimizerState.zeros_like(params, OptimizerMode.ADAM)
    grads = [np.array([1.0, 0.5]), np.array([-0.5, 0.5]), np.array([0.25, -1.0])]
    lr, b1, b2, eps, wd = 0.1, 0.9, 0.99, 1e-8, 0.01

    w = np.array([1.0, -2.0])
    m = np.zeros(2)
    v = np.zeros(2)
    for t, g in enumerate(grads, start=1):
        params, opt, _ = optimizer_update(
            opt, params, {"w": g.astype(np.float32)}, lr, (b1, b2), eps, wd, clip_norm=0.0
        )
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w = w - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)

    np.testing.assert_allclose(params["w"], w, rtol=1e-5)
    np.testing.assert_allclose(opt.m["w"], m, rtol=1e-5)
    np.testing.assert_allclose(opt.v["w"], v, rtol=1e-5)
    assert opt.step == 3


def test_lamb_scales_by_trust_ratio():
    """Test the first LAMB step moves by lr * ||w|| / ||u|| along the Adam direction."""
    params = _params(w=[3.0, 4.0])
    opt = OptimizerState.zeros_like(params, OptimizerMode.LAMB)
    new, _, _ = optimizer_update(opt, params, {"w": np.array([2.0, 2.0], dtype=np.float32)}, 0.1, weight_decay=0.0)
    # first-step Adam direction is g / |g| = (1, 1); trust ratio 5 / sqrt(2)
    expected = np.array([3.0, 4.0]) - 0.1 * (5.0 / math.sqrt(2.0))
    np.testing.assert_allclose(new["w"], expected, rtol=1e-5)


def test_trust_ratio_limits():
    """Test the trust ratio is clamped at 10 and defaults to 1 for zero norms."""
    assert trust_ratio(np.full(4, 50.0), np.full(4, 0.5)) == 10.0
    assert trust_ratio(np.zeros(3), np.ones(3)) == 1.0
    assert trust_ratio(np.ones(3), np.zeros(3)) == 1.0
    assert trust_ratio(np.array([3.0, 4.0]), np.array([0.0, 1.0])) == pytest.approx(5.0)


def test_clip_by_global_norm():
    """Test gradients above the limit are rescaled and the raw norm is reported."""
    clipped, norm = clip_by_global_norm({"a": np.array([3.0], dtype=np.float32), "b": np.array([4.0], dtype=np.float32)}, 1.0)
    assert norm == pytest.approx(5.0)
    np.testing.assert_allclose(clipped["a"], [0.6], rtol=1e-6)
    np.testing.assert_allclose(clipped["b"], [0.8], rtol=1e-6)
    untouched, _ = clip_by_global_norm({"a": np.array([0.1])}, 1.0)
    np.testing.assert_array_equal(untouched["a"], [0.1])


def test_missing_gradient_raises():
    """Test every parameter needs a gradient."""
    params = _params(a=[1.0], b=[2.0])
    opt = OptimizerState.zeros_like(params, OptimizerMode.ADAM)
    with pytest.raises(MissingGradientError, match="b"):
        optimizer_update(opt, params, {"a": np.ones(1)}, 0.1)
    with pytest.raises(ShapeError):
        optimizer_update(opt, params, {"a": np.ones(2), "b": np.ones(1)}, 0.1)


def test_zero_learning_rate_keeps_parameters():
    """Test lr = 0 leaves parameters bit-identical."""
    params = _params(w=[0.3, -0.7])
    opt = OptimizerState.zeros_like(params, OptimizerMode.LAMB)
    new, _, _ = optimizer_update(opt, params, {"w": np.ones(2, dtype=np.float32)}, 0.0)
    assert new.equal(params)


def test_cosine_lr_shape():
    """Test linear warmup followed by cosine decay to zero."""
    assert cosine_lr(0, 10, 110, 1.0) == 0.0
    assert cosine_lr(5, 10, 110, 1.0) == pytest.approx(0.5)
    assert cosine_lr(10, 10, 110, 1.0) == pytest.approx(1.0)
    assert cosine_lr(60, 10, 110, 1.0) == pytest.approx(0.5)
    assert cosine_lr(110, 10, 110, 1.0) == pytest.approx(0.0)
    assert cosine_lr(500, 10, 110, 1.0) == pytest.approx(0.0)
    assert cosine_lr(3, 0, 0, 0.2) == 0.2


def test_ema_halflife():
    """Test the shadow covers half the distance to constant parameters after one halflife."""
    target = _params(w=np.ones(3))
    ema = EmaState(_params(w=np.zeros(3)), halflife=4.0)
    for _ in range(4):
        ema = ema.update(target)
    np.testing.assert_allclose(ema.shadow["w"], 0.5, rtol=1e-5)
    assert ema_decay(4.0) == pytest.approx(0.5**0.25)


def test_ema_zero_halflife_copies():
    """Test halflife 0 makes the shadow equal the parameters."""
    target = _params(w=[2.0])
    assert EmaState(_params(w=[0.0]), halflife=0.0).update(target).shadow.equal(target)


def test_weight_decay_applies_to_lamb_only():
    """Test zero gradients leave Adam parameters alone while LAMB still decays them."""
    params = _params(w=[3.0, 4.0])
    zero = {"w": np.zeros(2, dtype=np.float32)}
    adam = OptimizerState.zeros_like(params, OptimizerMode.ADAM)
    kept, _, _ = optimizer_update(adam, params, zero, 0.1, weight_decay=0.5)
    assert kept.equal(params)

    lamb = OptimizerState.zeros_like(params, OptimizerMode.LAMB)
    decayed, _, _ = optimizer_update(lamb, params, zero, 0.1, weight_decay=0.5)
    # update is 0.5 w, so the trust ratio is 2 and w shrinks by lr * 2 * 0.5
    np.testing.assert_allclose(decayed["w"], [2.7, 3.6], rtol=1e-6)
