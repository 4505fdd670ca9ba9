"""Test utility functions and helpers."""

from collections.abc import Callable
from pathlib import Path

import numpy as np

from src.models.fit.config import FitConfig


def rel_err(a, b) -> float:
    """Largest elementwise |a - b| / max(|a|, |b|)."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b) / denom))


def edm_heun_reference(
    denoiser: Callable[[np.ndarray, float], np.ndarray], x: np.ndarray, sigmas: np.ndarray
) -> np.ndarray:
    """Textbook EDM deterministic sampler (no input scaling), written independently of src."""
    x = np.array(x, dtype=np.float64)
    for i in range(len(sigmas) - 1):
        t_cur, t_next = float(sigmas[i]), float(sigmas[i + 1])
        d_cur = (x - denoiser(x, t_cur)) / t_cur
        x_next = x + (t_next - t_cur) * d_cur
        if t_next != 0.0:
            d_next = (x_next - denoiser(x_next, t_next)) / t_next
            x_next = x + (t_next - t_cur) * (0.5 * d_cur + 0.5 * d_next)
        x = x_next
    return x


def tiny_fit_config(**overrides) -> FitConfig:
    """A FIT small enough to train for a few steps inside a unit test."""
    values = dict(
        input_shape=(4, 8, 8, 1),
        patch=(1, 4, 4),
        group=(4, 1, 1),
        patch_channels=16,
        latent_count=8,
        latent_channels=16,
        blocks=1,
        global_layers=1,
        patch_head_channels=8,
        latent_head_channels=8,
        ffn_mult=2,
        cond_channels=8,
        n_classes=2,
    )
    values.update(overrides)
    return FitConfig(**values)


def tiny_run_text(output_dir: Path, **overrides) -> str:
    """Run config matching ``tiny_fit_config`` with a short schedule."""
    values = {
        "frames": 4,
        "height": 8,
        "width": 8,
        "group_h": 1,
        "group_w": 1,
        "patch_channels": 16,
        "latent_count": 8,
        "latent_channels": 16,
        "blocks": 1,
        "global_layers": 1,
        "patch_head_channels": 8,
        "latent_head_channels": 8,
        "ffn_mult": 2,
        "cond_channels": 8,
        "n_classes": 2,
        "sigma_in": 2.0,
        "steps": 20,
        "warmup": 2,
        "batch_videos": 2,
        "batch_images": 2,
        "checkpoint_every": 5,
        "ema_halflife": 5,
        "sample_steps": 4,
        "output_dir": str(output_dir),
    }
    values.update(overrides)
    lines = ["# tiny run used by the test suite"]
    lines += [f"{key} = {value}" for key, value in values.items()]
    return "\n".join(lines) + "\n"
