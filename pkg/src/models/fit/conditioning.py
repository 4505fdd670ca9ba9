"""Conditioning tokens (noise level, frame rate, resolution, class) and cascade inputs."""

from dataclasses import dataclass

import numpy as np
from einops import repeat

from src.core.exceptions import ShapeError
from src.diffusion.noise import standard_normal
from src.models.fit.config import FitConfig
from src.models.fit.layers import Mlp, Params
from src.models.fit.params import FitParams
from src.tensor import ops
from src.tensor.tensor import Tensor

# Frame rate of images, which are treated as videos with identical frames.
INFINITE_FRAMERATE = float("inf")

# Floor under the cascade augmentation level before taking its log.
AUG_SIGMA_FLOOR = 1e-3


def sinusoidal_embedding(values: np.ndarray, dim: int, max_period: float = 10_000.0) -> np.ndarray:
    """``[cos(v f_k), sin(v f_k)]`` with geometrically spaced frequencies."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    half = dim // 2
    freqs = np.exp(-np.log(max_period) * np.arange(half) / half)
    angles = values[:, None] * freqs[None, :]
    return np.concatenate([np.cos(angles), np.sin(angles)], axis=-1)


def is_infinite_framerate(nu: np.ndarray) -> np.ndarray:
    return np.isposinf(np.asarray(nu, dtype=np.float64))


@dataclass(frozen=True)
class CondTokens:
    """Ordered conditioning tokens of shape ``(B, K, latent_channels)``."""

    tokens: Tensor
    names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class ConditioningEncoder:
    """Builds CondTokens from per-sample scalars."""

    cfg: FitConfig

    @property
    def sigma_mlp(self) -> Mlp:
        return Mlp("cond.sigma", self.cfg.cond_channels, self.cfg.latent_channels)

    @property
    def nu_mlp(self) -> Mlp:
        return Mlp("cond.nu", self.cfg.cond_channels, self.cfg.latent_channels)

    @property
    def res_mlp(self) -> Mlp:
        return Mlp("cond.res", self.cfg.cond_channels, self.cfg.latent_channels)

    @property
    def aug_mlp(self) -> Mlp:
        return Mlp("cond.aug_sigma", self.cfg.cond_channels, self.cfg.latent_channels)

    def init(self, params: FitParams, rng: np.random.Generator) -> None:
        width = self.cfg.latent_channels
        self.sigma_mlp.init(params, rng)
        self.nu_mlp.init(params, rng)
        params.add("cond.nu_inf", rng.normal(0.0, 1.0, size=width))
        self.res_mlp.init(params, rng)
        params.add("cond.class_table", rng.normal(0.0, 1.0, size=(self.cfg.n_classes + 1, width)))
        if self.cfg.cascade:
            self.aug_mlp.init(params, rng)

    def __call__(
        self,
        p: Params,
        sigma: np.ndarray,
        nu: np.ndarray,
        resolution: np.ndarray,
        cond_id: np.ndarray,
        aug_sigma: np.ndarray | None = None,
    ) -> CondTokens:
        """
        Args:
            p: Parameter tensors
            sigma: Noise level per sample, shape (B,)
            nu: Frame rate per sample; ``inf`` marks images
            resolution: Original (H, W) per sample, shape (B, 2)
            cond_id: Class index per sample, 0 is the null condition
            aug_sigma: Cascade augmentation level per sample

        Returns:
            CondTokens ordered sigma, nu, resolution, class[, aug_sigma]
        """
        dtype = p["cond.nu_inf"].dtype
        E = self.cfg.cond_channels
        width = self.cfg.latent_channels

        def feature(values: np.ndarray) -> Tensor:
            return ops.constant(sinusoidal_embedding(values, E), dtype=dtype)

        sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
        batch = sigma.shape[0]
        sigma_tok = self.sigma_mlp(p, feature(np.log(sigma) / 4.0))

        inf_mask = is_infinite_framerate(np.broadcast_to(nu, (batch,)))
        finite_nu = np.where(inf_mask, 1.0, np.broadcast_to(nu, (batch,)))
        mask = ops.constant(inf_mask.astype(np.float64)[:, None], dtype=dtype)
        nu_tok = self.nu_mlp(p, feature(np.log(finite_nu))) * (1.0 - mask) + p["cond.nu_inf"] * mask

        resolution = np.broadcast_to(np.asarray(resolution, dtype=np.float64), (batch, 2))
        res_feat = np.concatenate(
            [sinusoidal_embedding(resolution[:, 0], E // 2), sinusoidal_embedding(resolution[:, 1], E // 2)],
            axis=-1,
        )
        res_tok = self.res_mlp(p, ops.constant(res_feat, dtype=dtype))

        ids = np.broadcast_to(np.asarray(cond_id, dtype=np.int64), (batch,))
        class_tok = ops.take(p["cond.class_table"], ids)

        tokens = [sigma_tok, nu_tok, res_tok, class_tok]
        names = ["sigma", "nu", "resolution", "class"]
        if self.cfg.cascade:
            aug = np.zeros(batch) if aug_sigma is None else np.broadcast_to(aug_sigma, (batch,))
            aug_feat = feature(np.log(np.asarray(aug, dtype=np.float64) + AUG_SIGMA_FLOOR) / 4.0)
            tokens.append(self.aug_mlp(p, aug_feat))
            names.append("aug_sigma")

        stacked = ops.concat([t.reshape(batch, 1, width) for t in tokens], axis=1)
        return CondTokens(stacked, tuple(names))


@dataclass(frozen=True)
class CascadeCondition:
    """Noise-augmented low-resolution channels and their per-sample augmentation level."""

    channels: np.ndarray
    aug_sigma: np.ndarray

    def stack(self, x: np.ndarray) -> np.ndarray:
        """Append the conditioning channels to ``(B, T, C, H, W)`` along the channel axis."""
        return np.concatenate([np.asarray(x, dtype=self.channels.dtype), self.channels], axis=2)


def cascade_condition(
    low_res: np.ndarray,
    aug_sigma: float | np.ndarray,
    rng: np.random.Generator,
    size: tuple[int, int] | None = None,
) -> CascadeCondition:
    """Corrupt ``(B, T, C_low, h, w)`` low-resolution frames with Gaussian noise of level ``aug_sigma``.

    Args:
        low_res: Low-resolution frames, already at the target size unless ``size`` is given
        aug_sigma: Augmentation level, scalar or one per sample
        rng: Source of the augmentation noise
        size: Target (H, W); frames are upsampled by nearest-neighbour repetition

    Returns:
        CascadeCondition with ``low_res + aug_sigma * eps`` as float32 channels

    Raises:
        ShapeError: If ``size`` is not an integer multiple of the frame size
    """
    low = np.asarray(low_res, dtype=np.float32)
    if size is not None:
        h, w = low.shape[-2:]
        if size[0] % h or size[1] % w:
            raise ShapeError(f"cannot upsample {(h, w)} to {size} by repetition")
        low = repeat(low, "b t c h w -> b t c (h fh) (w fw)", fh=size[0] // h, fw=size[1] // w)
    batch = low.shape[0]
    sigma = np.broadcast_to(np.asarray(aug_sigma, dtype=np.float64), (batch,))
    noise = standard_normal(rng, low.shape)
    augmented = low + sigma[:, None, None, None, None].astype(np.float32) * noise
    return CascadeCondition(augmented.astype(np.float32), np.array(sigma))
