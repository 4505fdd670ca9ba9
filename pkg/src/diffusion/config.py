"""Noise-level and framework configuration."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FrameworkVariant(str, Enum):
    """Preconditioning column to evaluate."""

    EDM = "edm"
    SCALED = "scaled"


class DiffusionConfig(BaseModel):
    """Scalars shared by every diffusion quantity.

    ``sigma_in`` divides the clean signal in the forward process. For
    videos of T frames upsampled by a factor s it is set to ``s * sqrt(T)``.
    """

    model_config = ConfigDict(frozen=True)

    sigma_data: float = Field(1.0, gt=0.0, description="Standard deviation of the clean data")
    sigma_in: float = Field(1.0, gt=0.0, description="Input scaling of the forward process")
    sigma_min: float = Field(0.002, gt=0.0, description="Smallest sampled noise level")
    sigma_max: float = Field(80.0, gt=0.0, description="Largest sampled noise level")
    variant: FrameworkVariant = Field(FrameworkVariant.SCALED, description="Framework column")
    p_mean: float = Field(-1.2, description="Mean of log(sigma) during training")
    p_std: float = Field(1.2, ge=0.0, description="Std of log(sigma) during training")

    @model_validator(mode="after")
    def _check_range(self) -> "DiffusionConfig":
        if not self.sigma_min < self.sigma_max:
            raise ValueError(
                f"sigma_min ({self.sigma_min}) must be below sigma_max ({self.sigma_max})"
            )
        return self

    @property
    def is_edm(self) -> bool:
        return self.variant is FrameworkVariant.EDM
