"""Deterministic probability-flow sampler with input scaling.

The ODE runs in the scaled domain x_sigma = x / sigma_in + sigma * eps, so
the derivative uses D / sigma_in and the final sample is multiplied back
by sigma_in.
"""

from collections.abc import Callable

import numpy as np
import structlog
from tqdm import tqdm

from src.core.exceptions import PreconditionError
from src.diffusion.config import DiffusionConfig
from src.sampling.config import SamplerConfig, Solver
from src.sampling.denoisers import Conditioning, DenoiserModel, GuidedDenoiser
from src.sampling.guidance import FrameMask
from src.sampling.schedule import karras_schedule

logger = structlog.get_logger(__name__)

Denoise = Callable[[np.ndarray, float], np.ndarray]


def to_derivative(x: np.ndarray, sigma: float, d: np.ndarray, dcfg: DiffusionConfig) -> np.ndarray:
    return (x - d / dcfg.sigma_in) / sigma


def euler_step(
    x: np.ndarray, sigma: float, sigma_next: float, denoiser: Denoise, dcfg: DiffusionConfig
) -> np.ndarray:
    if sigma <= 0.0:
        raise PreconditionError(f"sigma must be > 0, got {sigma}")
    d = to_derivative(x, sigma, denoiser(x, sigma), dcfg)
    return x + d * (sigma_next - sigma)


def heun_step(
    x: np.ndarray, sigma: float, sigma_next: float, denoiser: Denoise, dcfg: DiffusionConfig
) -> np.ndarray:
    """Second-order step; plain Euler when ``sigma_next`` is 0."""
    if sigma <= 0.0:
        raise PreconditionError(f"sigma must be > 0, got {sigma}")
    d = to_derivative(x, sigma, denoiser(x, sigma), dcfg)
    dt = sigma_next - sigma
    if sigma_next == 0.0:
        return x + d * dt
    x_2 = x + d * dt
    d_2 = to_derivative(x_2, sigma_next, denoiser(x_2, sigma_next), dcfg)
    d_prime = (d + d_2) / 2
    return x + d_prime * dt


def sample(
    model: DenoiserModel,
    cond: Conditioning | None,
    scfg: SamplerConfig,
    dcfg: DiffusionConfig,
    shape: tuple[int, ...],
    mask: FrameMask | None = None,
    x_init: np.ndarray | None = None,
    progress: bool = False,
) -> np.ndarray:
    """Integrate from pure noise at sigma_max down to 0.

    Args:
        model: Denoiser returning (D, latents)
        cond: Conditioning passed to the model; None for models that ignore it
        scfg: Steps, guidance, thresholding and solver
        dcfg: Noise range and sigma_in
        shape: Output shape, batch first
        mask: Known frames for reconstruction guidance
        x_init: Starting noise, drawn from ``scfg.seed`` when omitted
        progress: Show a tqdm bar

    Returns:
        Final sample multiplied by sigma_in
    """
    sigmas = karras_schedule(scfg.steps, dcfg.sigma_min, dcfg.sigma_max, scfg.rho)
    if x_init is None:
        rng = np.random.default_rng(scfg.seed)
        x = rng.standard_normal(shape) * sigmas[0]
    else:
        x = np.asarray(x_init, dtype=np.float64)

    guided = GuidedDenoiser(model, cond, scfg, mask)
    step = heun_step if scfg.solver is Solver.HEUN else euler_step
    for i in tqdm(range(scfg.steps), disable=not progress, desc="sampling", leave=False):
        x = step(x, float(sigmas[i]), float(sigmas[i + 1]), guided.at_step(i), dcfg)

    logger.debug("sample_complete", steps=scfg.steps, solver=scfg.solver.value, shape=shape)
    return x * dcfg.sigma_in
