"""Denoisers the sampler can drive.

A denoiser maps ``(x_sigma, sigma, conditioning, latents)`` to the estimate
D of the clean sample plus the latents to feed into its next call.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Protocol

import numpy as np

from src.diffusion.config import DiffusionConfig
from src.diffusion.framework import denoise, network_input
from src.models.fit.network import FitNetwork
from src.models.fit.params import FitParams
from src.sampling.config import SamplerConfig
from src.sampling.guidance import FrameMask, cfg_combine, dynamic_threshold, guidance_weight_at, reconstruction_guide
from src.tensor.context import no_grad
from src.tensor.tensor import Tensor


@dataclass(frozen=True)
class Conditioning:
    """Per-sample conditioning of one sampling run."""

    cond_id: np.ndarray
    nu: np.ndarray
    resolution: np.ndarray
    lowres: np.ndarray | None = None
    aug_sigma: np.ndarray | None = None

    @classmethod
    def build(
        cls,
        batch: int,
        cond_id: int,
        nu: float,
        resolution: tuple[int, int],
        lowres: np.ndarray | None = None,
        aug_sigma: float | None = None,
    ) -> "Conditioning":
        return cls(
            cond_id=np.full(batch, cond_id, dtype=np.int64),
            nu=np.full(batch, nu, dtype=np.float64),
            resolution=np.tile(np.asarray(resolution, dtype=np.float64), (batch, 1)),
            lowres=lowres,
            aug_sigma=None if aug_sigma is None else np.full(batch, aug_sigma),
        )

    @property
    def batch(self) -> int:
        return int(self.cond_id.shape[0])

    def unconditional(self) -> "Conditioning":
        return replace(self, cond_id=np.zeros_like(self.cond_id))

    def with_framerate(self, nu: float) -> "Conditioning":
        return replace(self, nu=np.full_like(self.nu, nu))

    def select_frames(self, frames: np.ndarray) -> "Conditioning":
        if self.lowres is None:
            return self
        return replace(self, lowres=self.lowres[:, frames])


class DenoiserModel(Protocol):
    def __call__(
        self, x_sigma: np.ndarray, sigma: float, cond: Conditioning, latents: Any
    ) -> tuple[np.ndarray, Any]: ...


@dataclass(frozen=True)
class GaussianOracleDenoiser:
    """Exact posterior mean for data drawn from N(0, sigma_data^2 I).

    With x_sigma = x / sigma_in + sigma * eps,
    E[x | x_sigma] = sigma_in * sigma_data^2 / (sigma_data^2 + sigma_in^2 sigma^2) * x_sigma.
    """

    dcfg: DiffusionConfig

    def gain(self, sigma: float) -> float:
        sd2 = self.dcfg.sigma_data**2
        si = self.dcfg.sigma_in
        return si * sd2 / (sd2 + si * si * sigma * sigma)

    def exact_flow(self, x_max: np.ndarray, sigma: float) -> np.ndarray:
        """Probability-flow solution from sigma_max down to ``sigma``, in the scaled domain."""
        a = self.dcfg.sigma_data**2 / self.dcfg.sigma_in**2
        return x_max * np.sqrt((a + sigma**2) / (a + self.dcfg.sigma_max**2))

    def __call__(
        self, x_sigma: np.ndarray, sigma: float, cond: Conditioning | None = None, latents: Any = None
    ) -> tuple[np.ndarray, Any]:
        return self.gain(sigma) * x_sigma, latents


@dataclass(frozen=True)
class FitDenoiserModel:
    """Network-backed denoiser: D = c_out * F(c_in * x_sigma) + c_skip * x_sigma."""

    network: FitNetwork
    params: FitParams
    dcfg: DiffusionConfig
    _tensors: dict[str, Tensor] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_tensors", self.params.tensors())

    def __call__(
        self, x_sigma: np.ndarray, sigma: float, cond: Conditioning, latents: Any
    ) -> tuple[np.ndarray, Any]:
        batch = x_sigma.shape[0]
        sigmas = np.full(batch, sigma)
        x_in = network_input(np.asarray(x_sigma, dtype=np.float32), sigmas, self.dcfg)
        with no_grad():
            f_out, new_latents = self.network.forward(
                self._tensors,
                x_in,
                sigmas,
                cond.nu,
                cond.resolution,
                cond.cond_id,
                prev_latents=latents,
                lowres=cond.lowres,
                aug_sigma=cond.aug_sigma,
            )
        d = denoise(f_out.numpy().astype(np.float64), np.asarray(x_sigma, dtype=np.float64), sigmas, self.dcfg)
        return d, new_latents.numpy()


@dataclass
class GuidedDenoiser:
    """Classifier-free guidance, dynamic thresholding and reconstruction guidance around a model.

    Keeps separate self-conditioning latents for the conditional and the
    unconditional stream. ``at_step`` selects the guidance weight.
    """

    model: DenoiserModel
    cond: Conditioning
    scfg: SamplerConfig
    mask: FrameMask | None = None
    weight: float = 1.0
    cond_latents: Any = None
    uncond_latents: Any = None

    def at_step(self, step_index: int) -> "GuidedDenoiser":
        self.weight = guidance_weight_at(step_index, self.scfg)
        return self

    def __call__(self, x_sigma: np.ndarray, sigma: float) -> np.ndarray:
        d_cond, self.cond_latents = self.model(x_sigma, sigma, self.cond, self.cond_latents)
        if self.weight == 1.0:
            d = d_cond
        else:
            d_uncond, self.uncond_latents = self.model(
                x_sigma, sigma, self.cond.unconditional(), self.uncond_latents
            )
            d = cfg_combine(d_cond, d_uncond, self.weight)
        if self.scfg.threshold_percentile is not None:
            d = dynamic_threshold(d, self.scfg.threshold_percentile)
        return reconstruction_guide(d, self.mask, self.scfg.recon_weight)
