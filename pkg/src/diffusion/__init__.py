"""Generalized EDM diffusion framework with input scaling."""

from src.diffusion.config import DiffusionConfig, FrameworkVariant
from src.diffusion.framework import (
    Scalings,
    denoise,
    expand_sigma,
    forward_process,
    loss_d,
    loss_f,
    network_input,
    scalings,
    train_target,
    v_from_x,
    x_from_v,
)
from src.diffusion.noise import sample_sigma, standard_normal

__all__ = [
    "DiffusionConfig",
    "FrameworkVariant",
    "Scalings",
    "denoise",
    "expand_sigma",
    "forward_process",
    "loss_d",
    "loss_f",
    "network_input",
    "sample_sigma",
    "scalings",
    "standard_normal",
    "train_target",
    "v_from_x",
    "x_from_v",
]
