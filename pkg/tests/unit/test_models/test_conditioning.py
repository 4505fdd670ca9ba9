"""Tests for cascade conditioning inputs."""

import numpy as np
import pytest

from src.core.exceptions import ShapeError
from src.models.fit import FitNetwork, cascade_condition
from tests.utils import tiny_fit_config


def test_zero_augmentation_passes_low_res_through(rng):
    """Test aug_sigma = 0 leaves the low-resolution frames untouched."""
    low = rng.standard_normal((2, 4, 1, 8, 8)).astype(np.float32)
    cond = cascade_condition(low, 0.0, rng)
    np.testing.assert_array_equal(cond.channels, low)
    np.testing.assert_array_equal(cond.aug_sigma, [0.0, 0.0])


def test_upsampling_repeats_pixels(rng):
    """Test frames are brought to the target size by nearest-neighbour repetition."""
    low = rng.standard_normal((1, 2, 1, 4, 4)).astype(np.float32)
    cond = cascade_condition(low, 0.0, rng, size=(8, 8))
    expected = np.repeat(np.repeat(low, 2, axis=-2), 2, axis=-1)
    np.testing.assert_array_equal(cond.channels, expected)
    with pytest.raises(ShapeError, match="upsample"):
        cascade_condition(low, 0.0, rng, size=(6, 8))


def test_stacked_channel_count(rng):
    """Test the conditioning adds C_lowres channels to the C video channels."""
    x = rng.standard_normal((2, 4, 1, 8, 8))
    low = rng.standard_normal((2, 4, 2, 8, 8))
    stacked = cascade_condition(low, 0.3, rng).stack(x)
    assert stacked.shape == (2, 4, 3, 8, 8)
    np.testing.assert_array_equal(stacked[:, :, :1], x.astype(np.float32))


def test_augmented_variance_adds_noise_variance(rng):
    """Test Var[low_res + aug_sigma * eps] is Var[low_res] + aug_sigma^2."""
    low = 0.5 * rng.standard_normal((1, 1, 1, 200, 200))
    cond = cascade_condition(low, 0.8, rng)
    assert np.var(cond.channels) == pytest.approx(np.var(low) + 0.64, rel=0.03)


def test_per_sample_levels(rng):
    """Test each sample is corrupted at its own level."""
    low = rng.standard_normal((2, 2, 1, 8, 8)).astype(np.float32)
    cond = cascade_condition(low, np.array([0.0, 1.0]), rng)
    np.testing.assert_array_equal(cond.channels[0], low[0])
    assert not np.allclose(cond.channels[1], low[1])


def test_cascade_network_consumes_condition(rng):
    """Test the channels and levels feed a cascade network directly."""
    cfg = tiny_fit_config(lowres_channels=1)
    network = FitNetwork(cfg)
    T, H, W, C = cfg.input_shape
    x = rng.standard_normal((2, T, C, H, W))
    cond = cascade_condition(rng.standard_normal((2, T, 1, H // 2, W // 2)), 0.5, rng, size=(H, W))
    out, _ = network.forward(
        network.init(0).tensors(),
        x,
        np.array([0.5, 1.0]),
        np.full(2, 8.0),
        [(H, W)] * 2,
        np.array([1, 2]),
        lowres=cond.channels,
        aug_sigma=cond.aug_sigma,
    )
    assert out.shape == x.shape
    assert cond.stack(x).shape[2] == C + cfg.lowres_channels
