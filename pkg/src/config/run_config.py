"""Experiment configuration: a flat ``key = value`` file.

Blank lines and ``#`` comments are ignored. Every key has a default, unknown
keys are rejected, and ``serialize`` writes every field in declaration order
so ``serialize(parse(text))`` is a fixed point after one pass.
"""

import math
from enum import Enum
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.config.settings import settings
from src.core.exceptions import ConfigurationError
from src.diffusion.config import DiffusionConfig, FrameworkVariant
from src.models.fit.config import FitConfig
from src.sampling.config import GuidanceMode, SamplerConfig, Solver
from src.training.config import TrainConfig
from src.training.optim import OptimizerMode


class RunConfig(BaseModel):
    """All knobs of a run; projections build the per-module configs."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # Diffusion
    sigma_data: float = Field(1.0, description="Clean-data standard deviation")
    sigma_in: float = Field(math.sqrt(8.0), description="Input scaling, s * sqrt(T)")
    sigma_min: float = Field(0.002)
    sigma_max: float = Field(80.0)
    variant: FrameworkVariant = Field(FrameworkVariant.SCALED)
    p_mean: float = Field(-1.2)
    p_std: float = Field(1.2)

    # Data and model
    frames: int = Field(8, description="T")
    height: int = Field(16)
    width: int = Field(16)
    channels: int = Field(1)
    patch_h: int = Field(4)
    patch_w: int = Field(4)
    group_h: int = Field(2, description="Group height in patches")
    group_w: int = Field(2, description="Group width in patches")
    patch_channels: int = Field(32)
    latent_count: int = Field(32)
    latent_channels: int = Field(64)
    blocks: int = Field(2)
    global_layers: int = Field(2)
    patch_head_channels: int = Field(16)
    latent_head_channels: int = Field(16)
    ffn_mult: int = Field(4)
    cond_channels: int = Field(32)
    n_classes: int = Field(4)
    self_cond_prob: float = Field(0.9)
    label_dropout: float = Field(0.1)
    dropout: float = Field(0.1)
    lowres_channels: int = Field(0)
    zero_init: bool = Field(True)

    # Training
    steps: int = Field(1000)
    batch_videos: int = Field(8)
    batch_images: int = Field(8)
    optimizer: OptimizerMode = Field(OptimizerMode.LAMB)
    lr: float = Field(5e-3)
    warmup: int = Field(20)
    beta1: float = Field(0.9)
    beta2: float = Field(0.99)
    adam_eps: float = Field(1e-8)
    weight_decay: float = Field(0.01)
    clip_norm: float = Field(1.0)
    ema_halflife: float = Field(20.0)
    seed: int = Field(0)
    checkpoint_every: int = Field(100)
    log_every: int = Field(10)
    base_framerate: float = Field(8.0)
    rate_factors: tuple[int, ...] = Field((1, 2, 4))
    image_framerate: Literal["infinite", "base"] = Field("infinite")
    prefetch: int = Field(2)

    # Sampling
    sample_steps: int = Field(64)
    rho: float = Field(7.0)
    guidance_weight: float = Field(1.0)
    guidance_mode: GuidanceMode = Field(GuidanceMode.CONSTANT)
    threshold_percentile: float | None = Field(99.5)
    recon_weight: float = Field(0.5)
    solver: Solver = Field(Solver.HEUN)
    sample_seed: int = Field(0)

    # Paths
    output_dir: str = Field(default_factory=lambda: str(Path(settings.output_dir) / "default"))

    @field_validator("rate_factors", mode="before")
    @classmethod
    def _split_list(cls, v: Any) -> Any:
        if isinstance(v, str):
            return tuple(part.strip() for part in v.split(",") if part.strip())
        return v

    @field_validator("threshold_percentile", mode="before")
    @classmethod
    def _none_literal(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in ("none", "off", ""):
            return None
        return v

    @model_validator(mode="after")
    def _check_projections(self) -> "RunConfig":
        self.diffusion()
        self.fit()
        self.sampler()
        self.train()
        return self

    def diffusion(self) -> DiffusionConfig:
        return DiffusionConfig(
            sigma_data=self.sigma_data,
            sigma_in=self.sigma_in,
            sigma_min=self.sigma_min,
            sigma_max=self.sigma_max,
            variant=self.variant,
            p_mean=self.p_mean,
            p_std=self.p_std,
        )

    def fit(self) -> FitConfig:
        return FitConfig(
            input_shape=(self.frames, self.height, self.width, self.channels),
            patch=(1, self.patch_h, self.patch_w),
            group=(self.frames, self.group_h, self.group_w),
            patch_channels=self.patch_channels,
            latent_count=self.latent_count,
            latent_channels=self.latent_channels,
            blocks=self.blocks,
            global_layers=self.global_layers,
            patch_head_channels=self.patch_head_channels,
            latent_head_channels=self.latent_head_channels,
            ffn_mult=self.ffn_mult,
            cond_channels=self.cond_channels,
            n_classes=self.n_classes,
            self_cond_prob=self.self_cond_prob,
            label_dropout=self.label_dropout,
            dropout=self.dropout,
            lowres_channels=self.lowres_channels,
            zero_init=self.zero_init,
        )

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(
            steps=self.sample_steps,
            rho=self.rho,
            guidance_weight=self.guidance_weight,
            guidance_mode=self.guidance_mode,
            threshold_percentile=self.threshold_percentile,
            recon_weight=self.recon_weight,
            solver=self.solver,
            seed=self.sample_seed,
        )

    def train(self) -> TrainConfig:
        return TrainConfig(
            steps=self.steps,
            batch_videos=self.batch_videos,
            batch_images=self.batch_images,
            optimizer=self.optimizer,
            lr=self.lr,
            warmup=self.warmup,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.adam_eps,
            weight_decay=self.weight_decay,
            clip_norm=self.clip_norm,
            ema_halflife=self.ema_halflife,
            seed=self.seed,
            checkpoint_every=self.checkpoint_every,
            log_every=self.log_every,
            base_framerate=self.base_framerate,
            rate_factors=self.rate_factors,
            image_framerate=self.image_framerate,
            prefetch=self.prefetch,
        )


def _parse_lines(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def parse_config(text: str, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Parse ``key = value`` text; ``overrides`` win over file values.

    Raises:
        ConfigurationError: On malformed lines, unknown keys or invalid values
    """
    values: dict[str, Any] = _parse_lines(text)
    values.update(overrides or {})
    unknown = sorted(set(values) - set(RunConfig.model_fields))
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigurationError(str(e)) from e


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    return parse_config(text, overrides)


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def serialize(cfg: RunConfig) -> str:
    """Canonical text: every field in declaration order."""
    return "".join(f"{name} = {_format_value(getattr(cfg, name))}\n" for name in RunConfig.model_fields)
