"""Tests for token geometry and patching."""

import numpy as np
import pytest

from src.core.exceptions import ConfigurationError, ShapeError
from src.models.fit import FitConfig, PatchGeometry, group_tokens, patchify, ungroup_tokens, unpatchify


def test_token_counts():
    """Test token counts for the low-resolution and largest video shapes."""
    assert PatchGeometry((16, 40, 64, 3), (1, 4, 4)).num_tokens == 2560
    assert PatchGeometry((16, 288, 512, 3), (1, 4, 4)).num_tokens == 147_456


def test_group_counts():
    """Test a 5 x 4 patch group over 16 frames yields 8 groups of 320 tokens."""
    geometry = PatchGeometry((16, 40, 64, 3), (1, 4, 4), (16, 5, 4))
    assert geometry.group_grid == (2, 4)
    assert geometry.num_groups == 8
    assert geometry.tokens_per_group == 320
    assert geometry.patch_dim == 48


def test_patch_must_span_one_frame():
    """Test ConfigurationError for temporal patches."""
    with pytest.raises(ConfigurationError):
        PatchGeometry((4, 8, 8, 1), (2, 4, 4))


def test_indivisible_frame_raises():
    """Test ShapeError when the frame does not tile into patches."""
    with pytest.raises(ShapeError):
        PatchGeometry((4, 10, 8, 1), (1, 4, 4))


def test_group_must_cover_all_frames():
    """Test ConfigurationError for groups shorter than the video."""
    with pytest.raises(ConfigurationError):
        PatchGeometry((4, 8, 8, 1), (1, 4, 4), (2, 1, 1))


def test_fit_config_rejects_uneven_latents():
    """Test latent_count must split evenly over groups."""
    with pytest.raises(ValueError, match="latent_count"):
        FitConfig(input_shape=(4, 8, 8, 1), group=(4, 1, 1), latent_count=6)


def test_patchify_layout():
    """Test tokens are ordered (t, row, col) and hold (c, y, x) patches."""
    x = np.arange(1 * 2 * 1 * 4 * 4, dtype=np.float64).reshape(1, 2, 1, 4, 4)
    tokens = patchify(x, (1, 2, 2)).data
    assert tokens.shape == (1, 8, 4)
    np.testing.assert_array_equal(tokens[0, 0], [0, 1, 4, 5])
    np.testing.assert_array_equal(tokens[0, 1], [2, 3, 6, 7])
    np.testing.assert_array_equal(tokens[0, 4], x[0, 1, 0, :2, :2].reshape(-1))


def test_patchify_inverse(rng):
    """Test unpatchify restores the video."""
    x = rng.standard_normal((2, 3, 2, 8, 12))
    tokens = patchify(x, (1, 4, 4))
    np.testing.assert_array_equal(unpatchify(tokens, (3, 8, 12, 2), (1, 4, 4)).data, x)


def test_grouping_inverse_and_membership():
    """Test grouping gathers each spatial block over all frames and inverts exactly."""
    geometry = PatchGeometry((2, 8, 8, 1), (1, 2, 2), (2, 2, 2))
    ids = np.arange(geometry.num_tokens, dtype=np.float64).reshape(1, -1, 1)
    grouped = group_tokens(ids, geometry).data
    assert grouped.shape == (1, 4, 8, 1)
    # first group: rows 0-1, cols 0-1 of the 4 x 4 grid in both frames
    np.testing.assert_array_equal(grouped[0, 0, :, 0], [0, 1, 4, 5, 16, 17, 20, 21])
    np.testing.assert_array_equal(ungroup_tokens(grouped, geometry).data, ids)


def test_ungroup_rejects_wrong_shape():
    """Test ShapeError when the grouped tensor has the wrong group count."""
    geometry = PatchGeometry((2, 8, 8, 1), (1, 2, 2), (2, 2, 2))
    with pytest.raises(ShapeError):
        ungroup_tokens(np.zeros((1, 2, 8, 1)), geometry)
