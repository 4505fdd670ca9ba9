"""Training hyperparameters."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from src.training.optim import OptimizerMode


class TrainConfig(BaseModel):
    """Desk-scale defaults; the optimizer settings follow the large-scale recipe."""

    model_config = ConfigDict(frozen=True)

    steps: int = Field(1000, ge=1, description="Total optimizer steps of the schedule")
    batch_videos: int = Field(8, ge=0)
    batch_images: int = Field(8, ge=0)
    optimizer: OptimizerMode = Field(OptimizerMode.LAMB)
    lr: float = Field(5e-3, ge=0.0, description="Peak learning rate")
    warmup: int = Field(20, ge=0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.99, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    weight_decay: float = Field(0.01, ge=0.0)
    clip_norm: float = Field(1.0, ge=0.0, description="Global gradient norm limit, 0 disables")
    ema_halflife: float = Field(20.0, ge=0.0, description="EMA halflife in steps")
    seed: int = Field(0, ge=0)
    checkpoint_every: int = Field(100, ge=1)
    log_every: int = Field(10, ge=1)
    base_framerate: float = Field(8.0, gt=0.0)
    rate_factors: tuple[int, ...] = Field((1, 2, 4), min_length=1)
    image_framerate: Literal["infinite", "base"] = Field("infinite")
    prefetch: int = Field(2, ge=1, description="Batches produced ahead of the optimizer")

    @property
    def batch_size(self) -> int:
        return self.batch_videos + self.batch_images

    @property
    def betas(self) -> tuple[float, float]:
        return self.beta1, self.beta2
