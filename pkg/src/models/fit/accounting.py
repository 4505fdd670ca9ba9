"""Parameter and multiply-accumulate accounting."""

import numpy as np

from src.models.fit.config import FitConfig
from src.tensor.context import mac_counter, no_grad


def _linear(d_in: int, d_out: int) -> int:
    return d_in * d_out + d_out


def _attention(dim: int, kv_dim: int) -> int:
    return 2 * _linear(dim, dim) + _linear(kv_dim, dim) + kv_dim * dim


def _feed_forward(dim: int, mult: int) -> int:
    return _linear(dim, dim * mult) + _linear(dim * mult, dim)


def count_parameters(cfg: FitConfig) -> int:
    """Closed-form parameter count of the network described by ``cfg``."""
    Dp, Dl, E, m = cfg.patch_channels, cfg.latent_channels, cfg.cond_channels, cfg.ffn_mult
    _, hp, wp = cfg.patch
    geometry = cfg.geometry
    p_in = (cfg.channels + cfg.lowres_channels) * hp * wp

    mlp = _linear(E, Dl) + _linear(Dl, Dl)
    cond = 3 * mlp + Dl + (cfg.n_classes + 1) * Dl + (mlp if cfg.cascade else 0)

    cond_read = 4 * Dl + _attention(Dl, Dl)
    group_read = 2 * Dl + 2 * Dp + _attention(Dl, Dp) + 2 * Dl + _feed_forward(Dl, m)
    global_layer = 2 * Dl + _attention(Dl, Dl) + 2 * Dl + _feed_forward(Dl, m)
    group_write = 2 * Dp + 2 * Dl + _attention(Dp, Dl) + 2 * Dp + _feed_forward(Dp, m)
    block = cond_read + group_read + cfg.global_layers * global_layer + group_write

    return (
        _linear(p_in, Dp)
        + geometry.num_tokens * Dp
        + cfg.latent_count * Dl
        + 2 * Dl
        + _linear(Dl, Dl)
        + cond
        + cfg.blocks * block
        + 2 * Dp
        + _linear(Dp, geometry.patch_dim)
    )


def forward_macs(cfg: FitConfig, batch: int = 1, seed: int = 0) -> int:
    """Matmul multiply-accumulates of one forward pass, measured on random input."""
    from src.models.fit.network import FitNetwork

    network = FitNetwork(cfg)
    params = network.init(seed).tensors()
    T, H, W, C = cfg.input_shape
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((batch, T, C, H, W))
    lowres = rng.standard_normal((batch, T, cfg.lowres_channels, H, W)) if cfg.cascade else None
    with no_grad(), mac_counter() as counter:
        network.forward(params, x, np.ones(batch), np.ones(batch), [(H, W)] * batch, np.ones(batch, dtype=int), lowres=lowres)
    return counter.total
