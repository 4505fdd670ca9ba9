"""Tests for the prefetching batch loader."""

import pytest

from src.training import PrefetchLoader


def test_loader_yields_steps_in_order():
    """Test every step in the range arrives once and in order."""
    loader = PrefetchLoader(lambda step: step * 10, 3, 8, depth=2)
    assert list(loader) == [(s, s * 10) for s in range(3, 8)]


def test_loader_empty_range():
    """Test an empty range yields nothing."""
    assert list(PrefetchLoader(lambda step: step, 5, 5)) == []


def test_loader_propagates_errors():
    """Test an exception in the producer is raised in the consumer."""

    def make_batch(step):
        if step == 2:
            raise RuntimeError("bad batch")
        return step

    with pytest.raises(RuntimeError, match="bad batch"):
        list(PrefetchLoader(make_batch, 0, 5))


def test_loader_stops_early():
    """Test breaking out of the loop shuts the producer down."""
    loader = PrefetchLoader(lambda step: step, 0, 1000, depth=1)
    for step, _ in loader:
        if step == 3:
            break
    loader.close()
    assert loader._thread is None
