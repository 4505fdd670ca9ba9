"""Hierarchical generation over increasing frame rates.

The lowest rate is generated autoregressively in windows of T frames,
each window conditioned on the last frame of the previous one. Every
higher rate is then generated in windows whose frames already produced at
a lower rate are fixed through reconstruction guidance.
"""

from collections.abc import Sequence

import numpy as np
import structlog

from src.core.exceptions import PreconditionError
from src.diffusion.config import DiffusionConfig
from src.sampling.config import SamplerConfig
from src.sampling.denoisers import Conditioning, DenoiserModel
from src.sampling.guidance import FrameMask
from src.sampling.sampler import sample

logger = structlog.get_logger(__name__)


def level_strides(levels: Sequence[int]) -> list[int]:
    """Frame stride of each level at the top rate; levels must nest."""
    levels = [int(level) for level in levels]
    if not levels or levels[0] < 1:
        raise PreconditionError(f"invalid frame-rate levels {levels}")
    for low, high in zip(levels, levels[1:]):
        if high <= low:
            raise PreconditionError(f"frame-rate levels must increase strictly: {levels}")
        if high % low:
            raise PreconditionError(f"level {low} does not nest in level {high}")
    top = levels[-1]
    return [top // level for level in levels]


def check_total_frames(total_frames: int, framerate_levels: Sequence[int], T: int) -> None:
    """Every level, the lowest included, must fill at least one window of T frames.

    Raises:
        PreconditionError: If the levels are invalid or ``total_frames`` is too short
    """
    strides = level_strides(framerate_levels)
    needed = (T - 1) * strides[0] + 1
    if total_frames < needed:
        raise PreconditionError(
            f"levels {list(framerate_levels)} need at least {needed} frames "
            f"to fill a {T}-frame window at the lowest rate, got {total_frames}"
        )


def window_starts(length: int, T: int, overlap: int) -> list[int]:
    """Window origins covering ``length`` frames; the last window ends at the sequence end."""
    if length < T:
        raise PreconditionError(f"{length} frames cannot fill a window of {T}")
    starts = [0]
    step = T - overlap
    while starts[-1] + T < length:
        starts.append(min(starts[-1] + step, length - T))
    return starts


def hierarchical_generate(
    model: DenoiserModel,
    cond: Conditioning,
    total_frames: int,
    framerate_levels: Sequence[int],
    scfg: SamplerConfig,
    dcfg: DiffusionConfig,
    frame_shape: tuple[int, int, int],
    T: int,
) -> np.ndarray:
    """Generate ``total_frames`` frames at the top rate.

    Args:
        model: Denoiser over windows of T frames
        cond: Conditioning; ``cond.nu`` is the frame rate of the top level
        total_frames: Output length at the top rate
        framerate_levels: Increasing rate multipliers, each dividing the next
        scfg: Sampler settings; ``recon_weight`` fixes known frames
        dcfg: Diffusion settings
        frame_shape: (C, H, W) of one frame
        T: Frames per model window

    Returns:
        Video ``(B, total_frames, C, H, W)``
    """
    check_total_frames(total_frames, framerate_levels, T)
    strides = level_strides(framerate_levels)
    top_rate = float(cond.nu[0])
    batch = cond.batch
    video = np.zeros((batch, total_frames) + tuple(frame_shape))
    known = np.zeros(total_frames, dtype=bool)

    for level_index, stride in enumerate(strides):
        frames = np.arange(0, total_frames, stride)
        level_cond = cond.with_framerate(top_rate / stride)
        overlap = 1 if level_index == 0 else 0
        produced = known.copy()
        for w, start in enumerate(window_starts(len(frames), T, overlap)):
            window = frames[start : start + T]
            mask = FrameMask(produced[window], video[:, window])
            window_cfg = scfg.model_copy(update={"seed": scfg.seed + 1000 * level_index + w})
            out = sample(
                model,
                level_cond.select_frames(window),
                window_cfg,
                dcfg,
                (batch, T) + tuple(frame_shape),
                mask=None if mask.empty else mask,
            )
            video[:, window] = out
            produced[window] = True
        logger.info("hierarchy_level_done", level=framerate_levels[level_index], frames=len(frames))
        known = produced
    return video
