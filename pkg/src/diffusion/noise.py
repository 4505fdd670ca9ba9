"""Training noise-level distribution."""

import numpy as np

from src.diffusion.config import DiffusionConfig


def sample_sigma(
    rng: np.random.Generator,
    cfg: DiffusionConfig,
    size: int | tuple[int, ...] | None = None,
) -> float | np.ndarray:
    """Draw sigma = exp(N(p_mean, p_std)) clamped to [sigma_min, sigma_max]."""
    log_sigma = rng.normal(cfg.p_mean, cfg.p_std, size=size)
    sigma = np.clip(np.exp(log_sigma), cfg.sigma_min, cfg.sigma_max)
    if size is None:
        return float(sigma)
    return sigma


def standard_normal(rng: np.random.Generator, shape: tuple[int, ...], dtype=np.float32) -> np.ndarray:
    return rng.standard_normal(shape).astype(dtype)
