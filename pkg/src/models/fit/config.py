"""FIT architecture configuration and shape-only token geometry."""

from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.exceptions import ConfigurationError, ShapeError


@dataclass(frozen=True)
class PatchGeometry:
    """Token arithmetic for a ``(T, H, W, C)`` input.

    Only shapes are involved, so counts for full-resolution inputs can be
    computed without allocating weights.
    """

    input_shape: tuple[int, int, int, int]
    patch: tuple[int, int, int]
    group: tuple[int, int, int] | None = None

    def __post_init__(self) -> None:
        T, H, W, _ = self.input_shape
        tp, hp, wp = self.patch
        if tp != 1:
            raise ConfigurationError(f"patches must span a single frame, got T_p={tp}")
        if H % hp or W % wp:
            raise ShapeError(f"frame {H}x{W} not divisible by patch {hp}x{wp}")
        if self.group is not None:
            tg, hg, wg = self.group
            if tg != T:
                raise ConfigurationError(f"groups must cover all {T} frames, got T_g={tg}")
            _, rows, cols = self.grid
            if rows % hg or cols % wg:
                raise ShapeError(f"patch grid {rows}x{cols} not divisible by group {hg}x{wg}")

    @property
    def grid(self) -> tuple[int, int, int]:
        T, H, W, _ = self.input_shape
        return T, H // self.patch[1], W // self.patch[2]

    @property
    def num_tokens(self) -> int:
        T, rows, cols = self.grid
        return T * rows * cols

    @property
    def patch_dim(self) -> int:
        return self.input_shape[3] * self.patch[1] * self.patch[2]

    @property
    def group_grid(self) -> tuple[int, int]:
        """Number of groups along rows and columns."""
        if self.group is None:
            return 1, 1
        _, rows, cols = self.grid
        return rows // self.group[1], cols // self.group[2]

    @property
    def num_groups(self) -> int:
        gr, gc = self.group_grid
        return gr * gc

    @property
    def tokens_per_group(self) -> int:
        return self.num_tokens // self.num_groups


class FitConfig(BaseModel):
    """Shape of the FIT denoiser. Defaults are the desk-scale toy model."""

    model_config = ConfigDict(frozen=True)

    input_shape: tuple[int, int, int, int] = Field((8, 16, 16, 1), description="(T, H, W, C)")
    patch: tuple[int, int, int] = Field((1, 4, 4), description="(T_p, H_p, W_p)")
    group: tuple[int, int, int] = Field((8, 2, 2), description="(T_g, H_g, W_g) in patch units")
    patch_channels: int = Field(32, ge=1)
    latent_count: int = Field(32, ge=1)
    latent_channels: int = Field(64, ge=1)
    blocks: int = Field(2, ge=1)
    global_layers: int = Field(2, ge=0)
    patch_head_channels: int = Field(16, ge=1)
    latent_head_channels: int = Field(16, ge=1)
    ffn_mult: int = Field(4, ge=1)
    cond_channels: int = Field(32, ge=4, description="Width of sinusoidal features")
    n_classes: int = Field(4, ge=1)
    self_cond_prob: float = Field(0.9, ge=0.0, le=1.0)
    label_dropout: float = Field(0.1, ge=0.0, le=1.0)
    dropout: float = Field(0.1, ge=0.0, lt=1.0)
    lowres_channels: int = Field(0, ge=0, description="Extra channels of a cascade input")
    zero_init: bool = Field(True, description="Zero the write and self-conditioning outputs")

    @model_validator(mode="after")
    def _check_shapes(self) -> "FitConfig":
        try:
            geometry = self.geometry
        except (ShapeError, ConfigurationError) as e:
            raise ValueError(str(e)) from e
        if self.latent_count % geometry.num_groups:
            raise ValueError(
                f"latent_count {self.latent_count} not divisible by {geometry.num_groups} groups"
            )
        if self.patch_channels % self.patch_head_channels:
            raise ValueError("patch_channels must be a multiple of patch_head_channels")
        if self.latent_channels % self.latent_head_channels:
            raise ValueError("latent_channels must be a multiple of latent_head_channels")
        if self.cond_channels % 4:
            raise ValueError("cond_channels must be a multiple of 4")
        return self

    @property
    def geometry(self) -> PatchGeometry:
        return PatchGeometry(self.input_shape, self.patch, self.group)

    @property
    def patch_heads(self) -> int:
        return self.patch_channels // self.patch_head_channels

    @property
    def latent_heads(self) -> int:
        return self.latent_channels // self.latent_head_channels

    @property
    def latents_per_group(self) -> int:
        return self.latent_count // self.geometry.num_groups

    @property
    def channels(self) -> int:
        return self.input_shape[3]

    @property
    def cascade(self) -> bool:
        return self.lowres_channels > 0
