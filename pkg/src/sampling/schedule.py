"""Noise-level schedule."""

import numpy as np

from src.core.exceptions import PreconditionError


def karras_schedule(steps: int, sigma_min: float, sigma_max: float, rho: float = 7.0) -> np.ndarray:
    """Noise levels interpolated in sigma^(1/rho) space, followed by a terminal 0.

    One step gives ``[sigma_max, 0]``.
    """
    if steps < 1:
        raise PreconditionError(f"steps must be >= 1, got {steps}")
    if not 0.0 < sigma_min < sigma_max:
        raise PreconditionError(f"need 0 < sigma_min < sigma_max, got {sigma_min}, {sigma_max}")
    ramp = np.linspace(0.0, 1.0, steps)
    min_inv_rho = sigma_min ** (1.0 / rho)
    max_inv_rho = sigma_max ** (1.0 / rho)
    sigmas = (max_inv_rho + ramp * (min_inv_rho - max_inv_rho)) ** rho
    return np.append(sigmas, 0.0)
