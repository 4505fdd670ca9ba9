"""Tests for hierarchical generation over frame-rate levels."""

import numpy as np
import pytest

from src.core.exceptions import PreconditionError
from src.diffusion import DiffusionConfig
from src.sampling import (
    Conditioning,
    GaussianOracleDenoiser,
    SamplerConfig,
    check_total_frames,
    hierarchical_generate,
    level_strides,
    window_starts,
)


def test_level_strides():
    """Test strides are the top rate over each level."""
    assert level_strides([1, 2]) == [2, 1]
    assert level_strides([1, 2, 4]) == [4, 2, 1]


@pytest.mark.parametrize("levels", [[], [2, 2], [2, 3], [0, 1]])
def test_level_strides_rejects_bad_levels(levels):
    """Test levels must be positive, increasing and nested."""
    with pytest.raises(PreconditionError):
        level_strides(levels)


def test_window_starts_cover_sequence():
    """Test windows reach the end and overlap as requested."""
    assert window_starts(4, 4, 1) == [0]
    assert window_starts(10, 4, 1) == [0, 3, 6]
    assert window_starts(8, 4, 0) == [0, 4]
    assert window_starts(9, 4, 0) == [0, 4, 5]
    with pytest.raises(PreconditionError):
        window_starts(3, 4, 0)


def test_known_frames_are_preserved():
    """Test frames produced at the low rate survive the high-rate pass."""
    dcfg = DiffusionConfig(sigma_in=2.0)
    scfg = SamplerConfig(steps=6, recon_weight=1.0, threshold_percentile=None)
    cond = Conditioning.build(2, cond_id=1, nu=8.0, resolution=(2, 2))
    model = GaussianOracleDenoiser(dcfg)

    video = hierarchical_generate(model, cond, 8, [1, 2], scfg, dcfg, (1, 2, 2), T=4)
    assert video.shape == (2, 8, 1, 2, 2)

    again = hierarchical_generate(model, cond, 8, [1, 2], scfg, dcfg, (1, 2, 2), T=4)
    np.testing.assert_array_equal(video, again)
    # the stride-2 frames come from the first level and are kept
    low_level = hierarchical_generate(
        model, cond.with_framerate(4.0), 4, [1], scfg, dcfg, (1, 2, 2), T=4
    )
    np.testing.assert_allclose(video[:, ::2], low_level, atol=1e-6)


def test_autoregressive_windows_share_a_frame():
    """Test consecutive low-rate windows agree on their overlapping frame."""
    dcfg = DiffusionConfig()
    scfg = SamplerConfig(steps=4, recon_weight=1.0, threshold_percentile=None)
    cond = Conditioning.build(1, cond_id=1, nu=8.0, resolution=(2, 2))
    model = GaussianOracleDenoiser(dcfg)
    video = hierarchical_generate(model, cond, 7, [1], scfg, dcfg, (1, 2, 2), T=4)
    first_window = hierarchical_generate(model, cond, 4, [1], scfg, dcfg, (1, 2, 2), T=4)
    np.testing.assert_array_equal(video[:, :3], first_window[:, :3])
    np.testing.assert_allclose(video[:, 3], first_window[:, 3], atol=1e-6)


def test_check_total_frames_needs_a_lowest_rate_window():
    """Test the lowest level must fill one window before any sampling starts."""
    check_total_frames(7, [1, 2], 4)
    check_total_frames(4, [1], 4)
    with pytest.raises(PreconditionError, match="at least 7 frames"):
        check_total_frames(6, [1, 2], 4)
    with pytest.raises(PreconditionError, match="at least 15 frames"):
        check_total_frames(8, [1, 2], 8)


def test_short_hierarchy_fails_before_sampling(mocker):
    """Test a too-short request is refused without calling the model."""
    dcfg = DiffusionConfig()
    model = mocker.Mock()
    cond = Conditioning.build(1, cond_id=1, nu=8.0, resolution=(2, 2))
    with pytest.raises(PreconditionError, match="lowest rate"):
        hierarchical_generate(model, cond, 6, [1, 2], SamplerConfig(steps=2), dcfg, (1, 2, 2), T=4)
    model.assert_not_called()
