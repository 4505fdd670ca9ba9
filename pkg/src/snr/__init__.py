"""Signal-to-noise analysis of redundant video data."""

from src.snr.lab import (
    SnrReport,
    averaged_noise_variance,
    block_average,
    empirical_snr,
    snr_grid,
    snr_scaling_experiment,
    write_snr_csv,
)

__all__ = [
    "SnrReport",
    "averaged_noise_variance",
    "block_average",
    "empirical_snr",
    "snr_grid",
    "snr_scaling_experiment",
    "write_snr_csv",
]
