"""Guidance and denoised-estimate corrections applied during sampling."""

from dataclasses import dataclass

import numpy as np

from src.core.exceptions import PreconditionError, ShapeError
from src.sampling.config import GuidanceMode, SamplerConfig


def cfg_combine(d_cond: np.ndarray, d_uncond: np.ndarray, g: float) -> np.ndarray:
    """Classifier-free guidance: d_uncond + g * (d_cond - d_uncond)."""
    if np.shape(d_cond) != np.shape(d_uncond):
        raise ShapeError(f"guidance inputs differ: {np.shape(d_cond)} vs {np.shape(d_uncond)}")
    return d_uncond + g * (d_cond - d_uncond)


def guidance_weight_at(step_index: int, cfg: SamplerConfig) -> float:
    """Guidance weight of one step.

    Oscillating mode keeps g over the first quarter of the steps, then
    alternates g on even steps and 1 on odd steps.
    """
    if not 0 <= step_index < cfg.steps:
        raise PreconditionError(f"step {step_index} outside [0, {cfg.steps})")
    g = cfg.guidance_weight
    if cfg.guidance_mode is GuidanceMode.CONSTANT:
        return g
    if step_index < cfg.steps // 4:
        return g
    return g if step_index % 2 == 0 else 1.0


def dynamic_threshold(x0: np.ndarray, percentile: float) -> np.ndarray:
    """Clamp to [-s, s] and divide by s, with s = max(1, percentile of |x0|).

    ``s`` is taken per sample (over all non-batch axes) for batched input
    and over the whole array for 1-D input.
    """
    if not 0.0 < percentile <= 100.0:
        raise PreconditionError(f"percentile must be in (0, 100], got {percentile}")
    x0 = np.asarray(x0)
    magnitude = np.abs(x0)
    if x0.ndim >= 2:
        flat = magnitude.reshape(x0.shape[0], -1)
        s = np.percentile(flat, percentile, axis=1).reshape((-1,) + (1,) * (x0.ndim - 1))
    else:
        s = np.percentile(magnitude, percentile)
    s = np.maximum(s, 1.0)
    return np.clip(x0, -s, s) / s


@dataclass(frozen=True)
class FrameMask:
    """Frames whose values are known, for reconstruction guidance.

    ``mask`` marks frames along axis 1 of a ``(B, T, ...)`` video;
    ``known`` holds their values (other entries are ignored).
    """

    mask: np.ndarray
    known: np.ndarray

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 1:
            raise ShapeError(f"frame mask must be 1-D, got {mask.shape}")
        if np.ndim(self.known) < 2 or np.shape(self.known)[1] != mask.shape[0]:
            raise ShapeError(f"known frames {np.shape(self.known)} do not match {mask.shape[0]} mask entries")
        object.__setattr__(self, "mask", mask)

    @property
    def empty(self) -> bool:
        return not bool(self.mask.any())


def reconstruction_guide(d: np.ndarray, mask: FrameMask | None, w_r: float) -> np.ndarray:
    """Pull masked frames of the denoised estimate toward known values.

    d'[mask] = d[mask] + w_r * (known - d[mask]); other frames unchanged.
    """
    if mask is None or mask.empty or w_r == 0.0:
        return d
    if np.shape(mask.known) != np.shape(d):
        raise ShapeError(f"known frames {np.shape(mask.known)} != estimate {np.shape(d)}")
    out = np.array(d, copy=True)
    sel = mask.mask
    if w_r == 1.0:
        out[:, sel] = mask.known[:, sel]
    else:
        out[:, sel] = d[:, sel] + w_r * (mask.known[:, sel] - d[:, sel])
    return out
