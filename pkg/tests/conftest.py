"""Pytest configuration and fixtures."""

import math

import numpy as np
import pytest

from src.diffusion.config import DiffusionConfig
from src.models.fit.config import FitConfig
from src.tensor.context import serial_mode
from tests.utils import tiny_fit_config, tiny_run_text


@pytest.fixture(autouse=True)
def _serial_kernels():
    """Every test runs with single-threaded matmul."""
    with serial_mode():
        yield


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def dcfg() -> DiffusionConfig:
    """Toy diffusion settings: sigma_in = s * sqrt(T) with s = 1, T = 8."""
    return DiffusionConfig(sigma_in=math.sqrt(8.0))


@pytest.fixture
def fit_cfg() -> FitConfig:
    return tiny_fit_config()


@pytest.fixture
def run_config_path(tmp_path):
    """Small run config written to disk, outputs under tmp_path."""
    path = tmp_path / "run.cfg"
    path.write_text(tiny_run_text(tmp_path / "out"))
    return path
