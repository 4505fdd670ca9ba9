"""Sampler configuration."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class GuidanceMode(str, Enum):
    """How the guidance weight varies over sampling steps."""

    CONSTANT = "constant"
    OSCILLATING = "oscillating"


class Solver(str, Enum):
    HEUN = "heun"
    EULER = "euler"


class SamplerConfig(BaseModel):
    """Deterministic sampler settings."""

    model_config = ConfigDict(frozen=True)

    steps: int = Field(64, ge=1, description="Number of noise levels before the terminal zero")
    rho: float = Field(7.0, gt=0.0, description="Schedule exponent")
    guidance_weight: float = Field(1.0, ge=0.0, description="Classifier-free guidance weight g")
    guidance_mode: GuidanceMode = Field(GuidanceMode.CONSTANT)
    threshold_percentile: float | None = Field(
        99.5, gt=0.0, le=100.0, description="Dynamic thresholding percentile; None disables it"
    )
    recon_weight: float = Field(0.5, ge=0.0, le=1.0, description="Reconstruction guidance blend w_r")
    solver: Solver = Field(Solver.HEUN)
    seed: int = Field(0, ge=0)
