"""FIT denoiser: patch tokens compressed into latent tokens."""

from src.models.fit.accounting import count_parameters, forward_macs
from src.models.fit.conditioning import (
    INFINITE_FRAMERATE,
    CascadeCondition,
    CondTokens,
    ConditioningEncoder,
    cascade_condition,
    sinusoidal_embedding,
)
from src.models.fit.config import FitConfig, PatchGeometry
from src.models.fit.network import FitBlock, FitNetwork, fit_block, fit_forward
from src.models.fit.params import FitParams
from src.models.fit.patching import group_tokens, patchify, ungroup_tokens, unpatchify

__all__ = [
    "INFINITE_FRAMERATE",
    "CascadeCondition",
    "CondTokens",
    "ConditioningEncoder",
    "FitBlock",
    "FitConfig",
    "FitNetwork",
    "FitParams",
    "PatchGeometry",
    "cascade_condition",
    "count_parameters",
    "fit_block",
    "fit_forward",
    "forward_macs",
    "group_tokens",
    "patchify",
    "sinusoidal_embedding",
    "ungroup_tokens",
    "unpatchify",
]
