"""Deterministic sampling with guidance and hierarchical generation."""

from src.sampling.config import GuidanceMode, SamplerConfig, Solver
from src.sampling.denoisers import (
    Conditioning,
    DenoiserModel,
    FitDenoiserModel,
    GaussianOracleDenoiser,
    GuidedDenoiser,
)
from src.sampling.guidance import (
    FrameMask,
    cfg_combine,
    dynamic_threshold,
    guidance_weight_at,
    reconstruction_guide,
)
from src.sampling.hierarchical import (
    check_total_frames,
    hierarchical_generate,
    level_strides,
    window_starts,
)
from src.sampling.sampler import euler_step, heun_step, sample
from src.sampling.schedule import karras_schedule

__all__ = [
    "Conditioning",
    "DenoiserModel",
    "FitDenoiserModel",
    "FrameMask",
    "GaussianOracleDenoiser",
    "GuidanceMode",
    "GuidedDenoiser",
    "SamplerConfig",
    "Solver",
    "cfg_combine",
    "check_total_frames",
    "dynamic_threshold",
    "euler_step",
    "guidance_weight_at",
    "heun_step",
    "hierarchical_generate",
    "karras_schedule",
    "level_strides",
    "reconstruction_guide",
    "sample",
    "window_starts",
]
