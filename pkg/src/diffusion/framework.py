"""Preconditioning, forward process, training targets and losses.

Every function works on NumPy arrays and on ``Tensor`` alike through the
arithmetic operators, so the same code builds training graphs and runs the
closed-form checks. ``sigma`` may be a scalar or one value per sample; a
per-sample array is broadcast against the leading batch axis.

Sign convention: the EDM column keeps ``F_tgt = sigma x - sigma_data^2 eps``
(plus a term proportional to ``1/sigma`` when ``sigma_in != 1``) with a
positive ``c_out``; the input-scaled column uses the v-prediction target
``-sigma x + sigma_data^2 eps`` with a negative ``c_out``. Both give the
same denoiser ``D``.
"""

from dataclasses import dataclass
from typing import Any, TypeVar

import numpy as np

from src.core.exceptions import PreconditionError, ShapeError
from src.diffusion.config import DiffusionConfig
from src.tensor.tensor import Tensor

Array = TypeVar("Array")
Sigma = float | np.ndarray


def _positive(sigma: Sigma, op: str) -> np.ndarray:
    s = np.asarray(sigma, dtype=np.float64)
    if not np.all(s > 0.0):
        raise PreconditionError(f"{op}: sigma must be > 0")
    return s


def expand_sigma(value: Any, ndim: int) -> Any:
    """Reshape a per-sample ``(B,)`` array to ``(B, 1, ..., 1)`` of rank ``ndim``."""
    arr = np.asarray(value)
    if arr.ndim == 0:
        return float(arr)
    if arr.ndim != 1:
        raise ShapeError(f"sigma must be scalar or 1-D, got shape {arr.shape}")
    return arr.reshape(arr.shape + (1,) * max(ndim - 1, 0))


def _raw(a: Any) -> Any:
    return a.data if isinstance(a, Tensor) else a


def _same_shape(op: str, a: Any, b: Any) -> None:
    a_shape, b_shape = np.shape(_raw(a)), np.shape(_raw(b))
    if a_shape != b_shape:
        raise ShapeError(f"{op}: shapes {a_shape} and {b_shape} differ")


@dataclass(frozen=True)
class Scalings:
    """The six preconditioning functions evaluated at one noise level."""

    c_in: Any
    c_out: Any
    c_skip: Any
    c_nrm: Any
    w: Any
    lam: Any

    @classmethod
    def for_reference_edm(cls, sigma: Sigma, sigma_data: float) -> "Scalings":
        """Karras et al.'s original preconditioning, without input scaling."""
        s = _positive(sigma, "scalings")
        sd2 = sigma_data**2
        total = s * s + sd2
        return cls(
            c_in=1.0 / np.sqrt(total),
            c_out=s * sigma_data / np.sqrt(total),
            c_skip=sd2 / total,
            c_nrm=1.0 / (sigma_data * np.sqrt(total)),
            w=np.ones_like(s),
            lam=total / (sd2 * s * s),
        )

    def as_floats(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in ("c_in", "c_out", "c_skip", "c_nrm", "w", "lam")}


def scalings(sigma: Sigma, cfg: DiffusionConfig) -> Scalings:
    """Evaluate c_in, c_out, c_skip, c_nrm, w and lambda for ``cfg.variant``."""
    s = _positive(sigma, "scalings")
    sd, si = cfg.sigma_data, cfg.sigma_in
    sd2 = sd * sd
    s2 = s * s
    lam = 1.0 / sd2 + 1.0 / s2
    c_nrm = 1.0 / (sd * np.sqrt(s2 + sd2))

    if cfg.is_edm:
        return Scalings(
            c_in=1.0 / np.sqrt(sd2 + s2),
            c_out=s * sd / np.sqrt(s2 + sd2),
            c_skip=sd2 / (s2 + sd2),
            c_nrm=c_nrm,
            w=np.ones_like(s),
            lam=lam,
        )

    return Scalings(
        c_in=1.0 / np.sqrt(sd2 / (si * si) + s2),
        c_out=-si * s * sd * np.sqrt(s2 + sd2) / (sd2 + si * s2),
        c_skip=si * sd2 / (si * s2 + sd2),
        c_nrm=c_nrm,
        w=(s2 + sd2) ** 2 / (s2 + sd2 / si) ** 2,
        lam=lam,
    )


def forward_process(x: Array, sigma: Sigma, eps: Any, cfg: DiffusionConfig) -> Array:
    """x_sigma = x / sigma_in + sigma * eps."""
    _same_shape("forward_process", x, eps)
    ndim = np.ndim(_raw(x))
    return x * (1.0 / cfg.sigma_in) + eps * expand_sigma(sigma, ndim)


def train_target(x: Array, eps: Any, sigma: Sigma, cfg: DiffusionConfig) -> Array:
    """Regression target F_tgt of the chosen framework column."""
    _same_shape("train_target", x, eps)
    ndim = np.ndim(_raw(x))
    sd2 = cfg.sigma_data**2
    s = expand_sigma(sigma, ndim)
    if not cfg.is_edm:
        return eps * sd2 - x * s

    target = x * s - eps * sd2
    if cfg.sigma_in != 1.0:
        s_pos = expand_sigma(_positive(sigma, "train_target"), ndim)
        spurious = sd2 * (cfg.sigma_in - 1.0) / (cfg.sigma_in * s_pos)
        target = target + x * spurious
    return target


def denoise(f_out: Array, x_sigma: Any, sigma: Sigma, cfg: DiffusionConfig) -> Array:
    """D = c_out * F + c_skip * x_sigma."""
    _same_shape("denoise", f_out, x_sigma)
    ndim = np.ndim(_raw(x_sigma))
    sc = scalings(sigma, cfg)
    return f_out * expand_sigma(sc.c_out, ndim) + x_sigma * expand_sigma(sc.c_skip, ndim)


def network_input(x_sigma: Array, sigma: Sigma, cfg: DiffusionConfig) -> Array:
    """c_in * x_sigma, the tensor the network actually sees."""
    return x_sigma * expand_sigma(scalings(sigma, cfg).c_in, np.ndim(_raw(x_sigma)))


def _batch_reduce(weighted_sq: Any, weight: Any) -> Any:
    per_sample = weighted_sq.sum(axis=tuple(range(1, np.ndim(_raw(weighted_sq)))))
    return (per_sample * weight).mean()


def loss_d(d: Array, x: Any, sigma: Sigma, cfg: DiffusionConfig) -> Any:
    """lambda(sigma) * ||D - x||^2, mean over batch, sum over the rest."""
    _same_shape("loss_d", d, x)
    diff = d - x
    return _batch_reduce(diff * diff, scalings(sigma, cfg).lam)


def loss_f(f_out: Array, x: Any, eps: Any, sigma: Sigma, cfg: DiffusionConfig) -> Any:
    """w(sigma) * ||F - c_nrm * F_tgt||^2, mean over batch, sum over the rest."""
    _same_shape("loss_f", f_out, x)
    ndim = np.ndim(_raw(x))
    sc = scalings(sigma, cfg)
    target = np.asarray(_raw(train_target(_raw(x), _raw(eps), sigma, cfg))) * expand_sigma(
        sc.c_nrm, ndim
    )
    diff = f_out - target
    return _batch_reduce(diff * diff, sc.w)


def x_from_v(x_sigma: Array, v: Any, sigma: Sigma, cfg: DiffusionConfig) -> Array:
    """Recover x from the noisy input and a v prediction."""
    _same_shape("x_from_v", x_sigma, v)
    ndim = np.ndim(_raw(x_sigma))
    s = expand_sigma(np.asarray(sigma, dtype=np.float64), ndim)
    sd2 = cfg.sigma_data**2
    return (x_sigma - v * (s / sd2)) * (1.0 / (1.0 / cfg.sigma_in + s * s / sd2))


def v_from_x(x_sigma: Array, x: Any, sigma: Sigma, cfg: DiffusionConfig) -> Array:
    """v = (sigma_data^2 x_sigma - (sigma_data^2 / sigma_in + sigma^2) x) / sigma."""
    _same_shape("v_from_x", x_sigma, x)
    ndim = np.ndim(_raw(x_sigma))
    s = expand_sigma(_positive(sigma, "v_from_x"), ndim)
    sd2 = cfg.sigma_data**2
    return (x_sigma * sd2 - x * (sd2 / cfg.sigma_in + s * s)) * (1.0 / s)
