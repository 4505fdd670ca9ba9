"""FIT denoiser network.

Patch tokens are compressed into a small set of latent tokens. Each block
reads the conditioning tokens, reads its group's patch tokens into that
group's share of the latents, mixes all latents with self-attention and
writes back into the group's patch tokens. Local patch self-attention is
replaced by a feed-forward layer.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np
import structlog

from src.core.exceptions import ShapeError
from src.models.fit.conditioning import CondTokens, ConditioningEncoder
from src.models.fit.config import FitConfig
from src.models.fit.layers import Attention, FeedForward, LayerNorm, Linear, Params
from src.models.fit.params import FitParams
from src.models.fit.patching import group_tokens, patchify, ungroup_tokens, unpatchify
from src.tensor import ops
from src.tensor.context import no_grad
from src.tensor.tensor import Tensor

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class FitBlock:
    """One read / compute / write block."""

    cfg: FitConfig
    index: int

    def _name(self, part: str) -> str:
        return f"blocks.{self.index}.{part}"

    # *** layer descriptions ***
    def cond_layers(self) -> tuple[LayerNorm, LayerNorm, Attention]:
        Dl = self.cfg.latent_channels
        return (
            LayerNorm(self._name("cond_read.norm_q"), Dl),
            LayerNorm(self._name("cond_read.norm_kv"), Dl),
            Attention(self._name("cond_read.attn"), Dl, Dl, self.cfg.latent_heads),
        )

    def read_layers(self) -> tuple[LayerNorm, LayerNorm, Attention, LayerNorm, FeedForward]:
        Dl, Dp = self.cfg.latent_channels, self.cfg.patch_channels
        return (
            LayerNorm(self._name("read.norm_q"), Dl),
            LayerNorm(self._name("read.norm_kv"), Dp),
            Attention(self._name("read.attn"), Dl, Dp, self.cfg.latent_heads),
            LayerNorm(self._name("read.norm_ff"), Dl),
            FeedForward(self._name("read.ff"), Dl, self.cfg.ffn_mult, self.cfg.dropout),
        )

    def global_layers(self, layer: int) -> tuple[LayerNorm, Attention, LayerNorm, FeedForward]:
        Dl = self.cfg.latent_channels
        prefix = f"global.{layer}"
        return (
            LayerNorm(self._name(f"{prefix}.norm_attn"), Dl),
            Attention(self._name(f"{prefix}.attn"), Dl, Dl, self.cfg.latent_heads),
            LayerNorm(self._name(f"{prefix}.norm_ff"), Dl),
            FeedForward(self._name(f"{prefix}.ff"), Dl, self.cfg.ffn_mult, self.cfg.dropout),
        )

    def write_layers(self) -> tuple[LayerNorm, LayerNorm, Attention, LayerNorm, FeedForward]:
        Dl, Dp = self.cfg.latent_channels, self.cfg.patch_channels
        zero = self.cfg.zero_init
        return (
            LayerNorm(self._name("write.norm_q"), Dp),
            LayerNorm(self._name("write.norm_kv"), Dl),
            Attention(self._name("write.attn"), Dp, Dl, self.cfg.patch_heads, zero_out=zero),
            LayerNorm(self._name("write.norm_ff"), Dp),
            FeedForward(self._name("write.ff"), Dp, self.cfg.ffn_mult, self.cfg.dropout, zero_out=zero),
        )

    def layers(self) -> list[Any]:
        out: list[Any] = [*self.cond_layers(), *self.read_layers()]
        for layer in range(self.cfg.global_layers):
            out.extend(self.global_layers(layer))
        out.extend(self.write_layers())
        return out

    def init(self, params: FitParams, rng: np.random.Generator) -> None:
        for layer in self.layers():
            layer.init(params, rng)

    # *** stages ***
    def cond_read(self, p: Params, latents: Tensor, cond: CondTokens) -> Tensor:
        """Latents ``(B, L, Dl)`` attend to the conditioning tokens."""
        norm_q, norm_kv, attn = self.cond_layers()
        return latents + attn(p, norm_q(p, latents), norm_kv(p, cond.tokens))

    def group_read(
        self,
        p: Params,
        patch_g: Tensor,
        latents_g: Tensor,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Each group's latents ``(B, G, L/G, Dl)`` attend to its patch tokens ``(B, G, N/G, Dp)``."""
        norm_q, norm_kv, attn, norm_ff, ff = self.read_layers()
        latents_g = latents_g + attn(p, norm_q(p, latents_g), norm_kv(p, patch_g))
        return latents_g + ff(p, norm_ff(p, latents_g), training, rng)

    def global_mix(
        self,
        p: Params,
        latents: Tensor,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Self-attention and feed-forward over all latents ``(B, L, Dl)``."""
        for layer in range(self.cfg.global_layers):
            norm_attn, attn, norm_ff, ff = self.global_layers(layer)
            h = norm_attn(p, latents)
            latents = latents + attn(p, h, h)
            latents = latents + ff(p, norm_ff(p, latents), training, rng)
        return latents

    def group_write(
        self,
        p: Params,
        patch_g: Tensor,
        latents_g: Tensor,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Each group's patch tokens attend to its latents, then a feed-forward."""
        norm_q, norm_kv, attn, norm_ff, ff = self.write_layers()
        patch_g = patch_g + attn(p, norm_q(p, patch_g), norm_kv(p, latents_g))
        return patch_g + ff(p, norm_ff(p, patch_g), training, rng)

    def grouped(
        self,
        p: Params,
        patch_g: Tensor,
        latents_g: Tensor,
        cond: CondTokens,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[Tensor, Tensor]:
        """Full block on grouped tensors ``(B, G, N/G, Dp)`` and ``(B, G, L/G, Dl)``."""
        B, G, Lg, Dl = latents_g.shape
        latents = self.cond_read(p, latents_g.reshape(B, G * Lg, Dl), cond)
        latents_g = self.group_read(p, patch_g, latents.reshape(B, G, Lg, Dl), training, rng)
        latents = self.global_mix(p, latents_g.reshape(B, G * Lg, Dl), training, rng)
        latents_g = latents.reshape(B, G, Lg, Dl)
        patch_g = self.group_write(p, patch_g, latents_g, training, rng)
        return patch_g, latents_g

    def __call__(
        self,
        p: Params,
        patch_tokens: Tensor,
        latents: Tensor,
        cond: CondTokens,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[Tensor, Tensor]:
        return fit_block(self, p, patch_tokens, latents, cond, training, rng)


def fit_block(
    block: FitBlock,
    p: Params,
    patch_tokens: Tensor,
    latents: Tensor,
    cond: CondTokens,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, Tensor]:
    """Run one block on ``(B, N, Dp)`` patch tokens and ``(B, L, Dl)`` latents."""
    geometry = block.cfg.geometry
    B, L, Dl = latents.shape
    if L != block.cfg.latent_count or patch_tokens.shape[1:] != (
        geometry.num_tokens,
        block.cfg.patch_channels,
    ):
        raise ShapeError(f"block inputs {patch_tokens.shape}, {latents.shape} do not match config")
    G = geometry.num_groups
    patch_g = group_tokens(patch_tokens, geometry)
    patch_g, latents_g = block.grouped(p, patch_g, latents.reshape(B, G, L // G, Dl), cond, training, rng)
    return ungroup_tokens(patch_g, geometry), latents_g.reshape(B, L, Dl)


@dataclass(frozen=True)
class FitNetwork:
    """Parameter layout and forward pass of the denoiser F."""

    cfg: FitConfig

    @property
    def geometry(self):
        return self.cfg.geometry

    @property
    def input_patch_dim(self) -> int:
        _, hp, wp = self.cfg.patch
        return (self.cfg.channels + self.cfg.lowres_channels) * hp * wp

    @property
    def output_patch_dim(self) -> int:
        return self.geometry.patch_dim

    @property
    def patch_embed(self) -> Linear:
        return Linear("patch_embed", self.input_patch_dim, self.cfg.patch_channels)

    @property
    def self_cond_norm(self) -> LayerNorm:
        return LayerNorm("self_cond.norm", self.cfg.latent_channels)

    @property
    def self_cond_proj(self) -> Linear:
        Dl = self.cfg.latent_channels
        return Linear("self_cond.proj", Dl, Dl, zero=self.cfg.zero_init)

    @property
    def out_norm(self) -> LayerNorm:
        return LayerNorm("out.norm", self.cfg.patch_channels)

    @property
    def out_proj(self) -> Linear:
        return Linear("out.proj", self.cfg.patch_channels, self.output_patch_dim)

    @property
    def conditioning(self) -> ConditioningEncoder:
        return ConditioningEncoder(self.cfg)

    @property
    def blocks(self) -> list[FitBlock]:
        return [FitBlock(self.cfg, i) for i in range(self.cfg.blocks)]

    def init(self, seed: int = 0) -> FitParams:
        """Draw fresh parameters; identical seeds give identical arrays."""
        rng = np.random.default_rng(seed)
        params = FitParams()
        self.patch_embed.init(params, rng)
        params.add(
            "pos_embed",
            rng.normal(0.0, 0.02, size=(self.geometry.num_tokens, self.cfg.patch_channels)),
        )
        params.add(
            "latent_init", rng.normal(0.0, 1.0, size=(self.cfg.latent_count, self.cfg.latent_channels))
        )
        self.self_cond_norm.init(params, rng)
        self.self_cond_proj.init(params, rng)
        self.conditioning.init(params, rng)
        for block in self.blocks:
            block.init(params, rng)
        self.out_norm.init(params, rng)
        self.out_proj.init(params, rng)
        logger.debug("fit_params_initialized", seed=seed, numel=params.numel())
        return params

    def embed(self, p: Params, x_in: Tensor, lowres: Any = None) -> Tensor:
        """Patch embedding plus learned positional embeddings, ``(B, N, Dp)``."""
        if lowres is not None:
            x_in = ops.concat([x_in, _cast(lowres, x_in.dtype)], axis=2)
        return self.patch_embed(p, patchify(x_in, self.cfg.patch)) + p["pos_embed"]

    def initial_latents(self, p: Params, batch: int, prev_latents: Any = None) -> Tensor:
        L, Dl = self.cfg.latent_count, self.cfg.latent_channels
        latents = p["latent_init"].broadcast_to((batch, L, Dl))
        if prev_latents is not None:
            prev = _cast(prev_latents, latents.dtype).detach()
            if prev.shape != (batch, L, Dl):
                raise ShapeError(f"prev_latents {prev.shape} != {(batch, L, Dl)}")
            latents = latents + self.self_cond_proj(p, self.self_cond_norm(p, prev))
        return latents

    def forward(
        self,
        p: Params,
        x_in: Any,
        sigma: Any,
        nu: Any,
        resolution: Any,
        cond_id: Any,
        prev_latents: Any = None,
        lowres: Any = None,
        aug_sigma: Any = None,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[Tensor, Tensor]:
        """Predict c_nrm * F_tgt from ``x_in = c_in * x_sigma``.

        Args:
            p: Parameter tensors
            x_in: Scaled noisy video ``(B, T, C, H, W)``
            sigma: Noise level per sample
            nu: Frame rate per sample, ``inf`` for images
            resolution: Original (H, W) per sample
            cond_id: Class index per sample, 0 for the null condition
            prev_latents: Latents of an earlier pass, used as a constant
            lowres: Cascade conditioning channels ``(B, T, C_low, H, W)``
            aug_sigma: Cascade augmentation level per sample
            training: Enables dropout
            rng: Source of dropout masks

        Returns:
            (prediction with the shape of ``x_in``, final latents ``(B, L, Dl)``)
        """
        dtype = p["pos_embed"].dtype
        x_in = _cast(x_in, dtype)
        T, H, W, C = self.cfg.input_shape
        if x_in.shape[1:] != (T, C, H, W):
            raise ShapeError(f"input {x_in.shape} does not match (B, {T}, {C}, {H}, {W})")
        if self.cfg.cascade and lowres is None:
            raise ShapeError("cascade network needs low-resolution conditioning channels")
        batch = x_in.shape[0]
        sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (batch,))

        patch_tokens = self.embed(p, x_in, lowres if self.cfg.cascade else None)
        cond = self.conditioning(p, sigma, nu, resolution, cond_id, aug_sigma)
        latents = self.initial_latents(p, batch, prev_latents)
        for block in self.blocks:
            patch_tokens, latents = block(p, patch_tokens, latents, cond, training, rng)

        out = self.out_proj(p, self.out_norm(p, patch_tokens))
        return unpatchify(out, self.cfg.input_shape, self.cfg.patch), latents

    def self_conditioned_forward(
        self,
        p: Params,
        x_in: Any,
        sigma: Any,
        nu: Any,
        resolution: Any,
        cond_id: Any,
        use_self_cond: bool,
        lowres: Any = None,
        aug_sigma: Any = None,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[Tensor, Tensor]:
        """Training-time forward: optionally a gradient-free first pass feeds its latents back."""
        prev = None
        if use_self_cond:
            with no_grad():
                _, prev = self.forward(
                    p, x_in, sigma, nu, resolution, cond_id, None, lowres, aug_sigma, training, rng
                )
            prev = prev.detach()
        return self.forward(p, x_in, sigma, nu, resolution, cond_id, prev, lowres, aug_sigma, training, rng)


def fit_forward(
    x_in: Any,
    sigma: Any,
    nu: Any,
    resolution: Any,
    cond_id: Any,
    prev_latents: Any,
    params: FitParams | Params,
    cfg: FitConfig,
    **kwargs: Any,
) -> tuple[Tensor, Tensor]:
    """Functional entry point over either a ``FitParams`` store or live tensors."""
    p = params.tensors() if isinstance(params, FitParams) else params
    return FitNetwork(cfg).forward(p, x_in, sigma, nu, resolution, cond_id, prev_latents, **kwargs)


def _cast(x: Any, dtype: np.dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x if x.dtype == dtype else Tensor(x.data, dtype=dtype)
    return Tensor(np.asarray(x), dtype=dtype)
