"""snapdiff - generalized EDM video diffusion with a FIT denoiser at desk scale."""

__version__ = "0.1.0"
