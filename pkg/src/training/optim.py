"""Adam and LAMB updates over named float32 arrays."""

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.core.exceptions import MissingGradientError, ShapeError
from src.models.fit.params import FitParams

TRUST_RATIO_MAX = 10.0


class OptimizerMode(str, Enum):
    ADAM = "adam"
    LAMB = "lamb"


@dataclass
class OptimizerState:
    """Moment buffers and step counter."""

    mode: OptimizerMode = OptimizerMode.LAMB
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray], mode: OptimizerMode) -> "OptimizerState":
        return cls(
            mode=mode,
            m={k: np.zeros_like(a, dtype=np.float32) for k, a in params.items()},
            v={k: np.zeros_like(a, dtype=np.float32) for k, a in params.items()},
        )


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values()))


def clip_by_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """Scale all gradients by max_norm / norm when the global norm exceeds max_norm.

    Returns the clipped gradients and the norm before clipping.
    """
    norm = global_norm(grads)
    if max_norm <= 0.0 or norm <= max_norm:
        return dict(grads), norm
    scale = np.float32(max_norm / norm)
    return {k: (g * scale).astype(np.float32) for k, g in grads.items()}, norm


def trust_ratio(weight: np.ndarray, update: np.ndarray) -> float:
    """||w|| / ||u|| clamped to [0, 10]; 1 when either norm is zero."""
    w_norm = float(np.linalg.norm(weight.astype(np.float64)))
    u_norm = float(np.linalg.norm(update.astype(np.float64)))
    if w_norm == 0.0 or u_norm == 0.0:
        return 1.0
    return min(max(w_norm / u_norm, 0.0), TRUST_RATIO_MAX)


def optimizer_update(
    opt: OptimizerState,
    params: FitParams,
    grads: Mapping[str, np.ndarray],
    lr: float,
    betas: tuple[float, float] = (0.9, 0.99),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
    clip_norm: float = 1.0,
) -> tuple[FitParams, OptimizerState, float]:
    """One Adam or LAMB step.

    Adam is the plain bias-corrected update. LAMB adds decoupled weight decay
    to the Adam direction and rescales it per tensor by the trust ratio.

    Args:
        opt: Current moments and step counter
        params: Current parameters
        grads: Gradient per parameter name; every name must be present
        lr: Learning rate of this step
        betas: Moment decay rates
        eps: Denominator floor
        weight_decay: Decoupled weight decay, LAMB only
        clip_norm: Global-norm clipping threshold (<= 0 disables)

    Returns:
        (new parameters, new optimizer state, gradient norm before clipping)

    Raises:
        MissingGradientError: If a parameter has no gradient
    """
    missing = [name for name in params if name not in grads]
    if missing:
        raise MissingGradientError(f"no gradient for: {', '.join(missing[:5])}")
    for name in params:
        if np.shape(grads[name]) != params[name].shape:
            raise ShapeError(f"{name}: gradient {np.shape(grads[name])} != {params[name].shape}")

    clipped, norm = clip_by_global_norm({k: grads[k] for k in params}, clip_norm)
    b1, b2 = betas
    step = opt.step + 1
    c1 = 1.0 - b1**step
    c2 = 1.0 - b2**step

    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name, w in params.items():
        g = np.asarray(clipped[name], dtype=np.float32)
        m = b1 * opt.m.get(name, np.zeros_like(w)) + (1.0 - b1) * g
        v = b2 * opt.v.get(name, np.zeros_like(w)) + (1.0 - b2) * g * g
        update = (m / c1) / (np.sqrt(v / c2) + eps)
        ratio = 1.0
        if opt.mode is OptimizerMode.LAMB:
            update = update + weight_decay * w
            ratio = trust_ratio(w, update)
        new_params[name] = (w - (lr * ratio) * update).astype(np.float32)
        new_m[name] = m.astype(np.float32)
        new_v[name] = v.astype(np.float32)

    return FitParams(new_params), OptimizerState(opt.mode, new_m, new_v, step), norm


def cosine_lr(step: int, warmup: int, total: int, peak: float) -> float:
    """Linear warmup to ``peak``, then cosine decay to 0 at ``total``."""
    if warmup > 0 and step < warmup:
        return peak * step / warmup
    if total <= warmup:
        return peak
    progress = min(max((step - warmup) / (total - warmup), 0.0), 1.0)
    return peak * 0.5 * (1.0 + math.cos(math.pi * progress))
