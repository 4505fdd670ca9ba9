"""Tests for the sprite dataset and template classifier."""

import numpy as np
import pytest

from src.core.exceptions import PreconditionError, ShapeError
from src.training import NearestTemplateClassifier, SpriteDataset, VideoBatch, images_as_videos, make_dataset
from src.training.dataset import SPRITE_SIZE, bounce_path


def test_make_dataset_is_reproducible():
    """Test the same seed yields identical batches."""
    a = make_dataset(7, n_videos=3, n_images=2)
    b = make_dataset(7, n_videos=3, n_images=2)
    np.testing.assert_array_equal(a.pixels, b.pixels)
    np.testing.assert_array_equal(a.cond_id, b.cond_id)
    assert not np.array_equal(a.pixels, make_dataset(8, n_videos=3, n_images=2).pixels)


def test_batch_layout(rng):
    """Test videos come first, images last, with the expected metadata."""
    dataset = SpriteDataset(T=4, H=12, W=12, n_classes=3)
    batch = dataset.batch(rng, 5, 3)
    assert batch.pixels.shape == (8, 4, 1, 12, 12)
    assert set(np.unique(batch.pixels)) <= {-1.0, 1.0}
    assert batch.is_image.tolist() == [False] * 5 + [True] * 3
    assert np.all((batch.cond_id >= 1) & (batch.cond_id <= 3))
    assert set(batch.framerate[:5]) <= {8.0, 4.0, 2.0}
    assert np.all(np.isinf(batch.framerate[5:]))
    np.testing.assert_array_equal(batch.resolution, np.tile([12.0, 12.0], (8, 1)))
    # images are the same frame repeated
    for image in batch.pixels[5:]:
        assert np.all(image == image[:1])


def test_base_framerate_ablation(rng):
    """Test images can be labelled with the base frame rate instead of infinity."""
    dataset = SpriteDataset(T=2, H=8, W=8, image_framerate="base")
    batch = dataset.image_batch(rng, 4)
    np.testing.assert_array_equal(batch.framerate, np.full(4, 8.0))


def test_dataset_validation():
    """Test invalid dataset settings are rejected."""
    with pytest.raises(PreconditionError):
        SpriteDataset(n_classes=5)
    with pytest.raises(PreconditionError):
        SpriteDataset(H=6)
    with pytest.raises(PreconditionError):
        SpriteDataset(image_framerate="fast")


def test_bounce_path_stays_inside():
    """Test the sprite reflects at the borders."""
    path = bounce_path(0, 0, 1, 1, 40, 10, 12)
    limit_y, limit_x = 10 - SPRITE_SIZE, 12 - SPRITE_SIZE
    assert all(0 <= y <= limit_y and 0 <= x <= limit_x for y, x in path)
    assert path[:3] == [(0, 0), (1, 1), (2, 2)]
    assert path[3] == (3, 3)
    assert path[4] == (2, 4)


def test_rate_factor_subsamples_motion():
    """Test a factor-2 video covers the positions of every second base frame."""
    dataset = SpriteDataset(T=3, H=16, W=16, n_classes=1)
    slow = dataset.render_video(np.random.default_rng(0), 0, 1)
    fast = dataset.render_video(np.random.default_rng(0), 0, 2)
    # class 0 moves one row per base frame: frame 1 at factor 2 matches base frame 2
    full = SpriteDataset(T=5, H=16, W=16, n_classes=1).render_video(np.random.default_rng(0), 0, 1)
    np.testing.assert_array_equal(fast[1], full[2])
    np.testing.assert_array_equal(slow[0], fast[0])


def test_classifier_is_perfect_on_clean_data():
    """Test the nearest-template classifier recovers every label of clean videos."""
    batch = make_dataset(3, n_videos=24, n_images=0, T=4, H=12, W=12)
    classifier = NearestTemplateClassifier(12, 12, n_classes=4)
    assert classifier.accuracy(batch.pixels, batch.cond_id - 1) == 1.0


def test_classifier_accepts_channel_first_frames():
    """Test frames with a channel axis are averaged before matching."""
    batch = make_dataset(4, n_videos=0, n_images=6, T=1, H=10, W=10)
    classifier = NearestTemplateClassifier(10, 10)
    labels = classifier.classify_frames(batch.pixels[:, 0])
    np.testing.assert_array_equal(labels, batch.cond_id - 1)


def test_images_as_videos_shapes():
    """Test image replication and batch validation."""
    batch = images_as_videos(np.zeros((2, 1, 8, 8)), 3, np.array([1, 2]))
    assert batch.pixels.shape == (2, 3, 1, 8, 8)
    assert batch.is_image.all()
    with pytest.raises(ShapeError):
        images_as_videos(np.zeros((2, 8, 8)), 3, np.array([1, 2]))
    with pytest.raises(ShapeError):
        VideoBatch(
            pixels=np.zeros((2, 1, 1, 8, 8)),
            framerate=np.ones(3),
            resolution=np.ones((2, 2)),
            cond_id=np.ones(2),
            is_image=np.zeros(2, dtype=bool),
        )
