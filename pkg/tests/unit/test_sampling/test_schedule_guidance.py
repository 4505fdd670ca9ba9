"""Tests for the noise schedule and guidance corrections."""

import numpy as np
import pytest

from src.core.exceptions import PreconditionError, ShapeError
from src.sampling import (
    FrameMask,
    GuidanceMode,
    SamplerConfig,
    cfg_combine,
    dynamic_threshold,
    guidance_weight_at,
    karras_schedule,
    reconstruction_guide,
)


def test_schedule_endpoints():
    """Test the schedule starts at sigma_max, reaches sigma_min and ends at zero."""
    sigmas = karras_schedule(10, 0.002, 80.0)
    assert len(sigmas) == 11
    assert sigmas[0] == pytest.approx(80.0)
    assert sigmas[-2] == pytest.approx(0.002)
    assert sigmas[-1] == 0.0
    assert np.all(np.diff(sigmas) < 0.0)


def test_single_step_schedule():
    """Test one step gives [sigma_max, 0]."""
    np.testing.assert_allclose(karras_schedule(1, 0.002, 80.0), [80.0, 0.0])


def test_schedule_rejects_bad_arguments():
    """Test PreconditionError for zero steps or an inverted range."""
    with pytest.raises(PreconditionError):
        karras_schedule(0, 0.002, 80.0)
    with pytest.raises(PreconditionError):
        karras_schedule(4, 80.0, 0.002)


def test_cfg_combine_endpoints():
    """Test g = 1 returns the conditional estimate and g = 0 the unconditional one."""
    cond, uncond = np.array([1.0, 2.0]), np.array([0.0, 4.0])
    np.testing.assert_array_equal(cfg_combine(cond, uncond, 1.0), cond)
    np.testing.assert_array_equal(cfg_combine(cond, uncond, 0.0), uncond)
    np.testing.assert_array_equal(cfg_combine(cond, uncond, 3.0), [3.0, -2.0])
    with pytest.raises(ShapeError):
        cfg_combine(cond, np.zeros(3), 2.0)


def test_constant_guidance_weight():
    """Test constant mode returns g at every step."""
    cfg = SamplerConfig(steps=8, guidance_weight=4.0)
    assert [guidance_weight_at(i, cfg) for i in range(8)] == [4.0] * 8


def test_oscillating_guidance_weight():
    """Test oscillating mode holds g for a quarter of the steps, then alternates with 1."""
    cfg = SamplerConfig(steps=8, guidance_weight=4.0, guidance_mode=GuidanceMode.OSCILLATING)
    assert [guidance_weight_at(i, cfg) for i in range(8)] == [4.0, 4.0, 4.0, 1.0, 4.0, 1.0, 4.0, 1.0]
    with pytest.raises(PreconditionError):
        guidance_weight_at(8, cfg)


def test_dynamic_threshold_bounds(rng):
    """Test thresholded values stay in [-1, 1] per sample."""
    x = rng.standard_normal((3, 1000)) * np.array([[0.1], [3.0], [30.0]])
    out = dynamic_threshold(x, 99.5)
    assert np.abs(out).max() <= 1.0
    # the quiet sample has s = 1 and is untouched
    np.testing.assert_array_equal(out[0], x[0])


def test_dynamic_threshold_divides_by_percentile():
    """Test values are clipped at the percentile and divided by it."""
    x = np.array([[0.5, -2.0, 4.0, 4.0]])
    out = dynamic_threshold(x, 100.0)
    np.testing.assert_allclose(out, [[0.125, -0.5, 1.0, 1.0]])
    with pytest.raises(PreconditionError):
        dynamic_threshold(x, 0.0)


def test_reconstruction_guide_blends_masked_frames(rng):
    """Test masked frames move toward the known values and the rest stay put."""
    d = rng.standard_normal((2, 4, 3))
    known = rng.standard_normal((2, 4, 3))
    mask = FrameMask(np.array([True, False, True, False]), known)
    exact = reconstruction_guide(d, mask, 1.0)
    np.testing.assert_array_equal(exact[:, [0, 2]], known[:, [0, 2]])
    np.testing.assert_array_equal(exact[:, [1, 3]], d[:, [1, 3]])
    half = reconstruction_guide(d, mask, 0.5)
    np.testing.assert_allclose(half[:, 0], 0.5 * (d[:, 0] + known[:, 0]))
    assert reconstruction_guide(d, mask, 0.0) is d
    assert reconstruction_guide(d, None, 1.0) is d


def test_frame_mask_validation():
    """Test FrameMask rejects mismatched shapes."""
    with pytest.raises(ShapeError):
        FrameMask(np.array([[True]]), np.zeros((1, 1)))
    with pytest.raises(ShapeError):
        FrameMask(np.array([True, False]), np.zeros((1, 3)))
    assert FrameMask(np.zeros(2, dtype=bool), np.zeros((1, 2))).empty
