"""Signal-to-noise behaviour of block-averaged noisy videos.

A video whose T x s x s pixel blocks share one value behaves, after block
averaging, like a single low-resolution frame whose noise variance shrank
by T * s^2. Scaling the clean signal down by sigma_in = s * sqrt(T) in the
forward process cancels that gain. The law is exact only for perfectly
redundant blocks; natural videos sit somewhere between the two extremes.
"""

from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import structlog
from einops import reduce, repeat

from src.core.exceptions import PreconditionError, ShapeError
from src.utils.metrics import CsvWriter

logger = structlog.get_logger(__name__)

# Below this many trials the measured ratios are noisy.
STABLE_TRIALS = 100

SNR_COLUMNS = ("T", "s", "sigma", "scaled", "snr_full", "snr_avg", "ratio", "predicted_ratio")


@dataclass(frozen=True)
class SnrReport:
    """One (T, s, sigma) cell of the experiment."""

    T: int
    s: int
    sigma: float
    scaled: bool
    snr_full: float
    snr_avg: float
    ratio: float
    predicted_ratio: float
    snr_reference: float

    def as_row(self) -> dict[str, float | int | bool]:
        row = asdict(self)
        return {key: row[key] for key in SNR_COLUMNS}


def block_average(video: np.ndarray, T: int, s: int) -> np.ndarray:
    """Mean over each T x s x s block of a ``(..., T, s*H, s*W)`` video.

    Returns ``(..., 1, H, W)``.
    """
    video = np.asarray(video)
    if video.ndim < 3:
        raise ShapeError(f"block_average expects (..., T, H, W), got {video.shape}")
    if video.shape[-3] != T:
        raise ShapeError(f"first video axis is {video.shape[-3]}, expected T={T}")
    if s < 1 or video.shape[-2] % s or video.shape[-1] % s:
        raise ShapeError(f"spatial dims {video.shape[-2:]} not divisible by s={s}")
    averaged = reduce(video, "... t (h s1) (w s2) -> ... h w", "mean", s1=s, s2=s)
    return averaged[..., None, :, :]


def empirical_snr(clean: np.ndarray, noisy: np.ndarray) -> float:
    """Signal power over noise power, as a plain ratio."""
    clean, noisy = np.asarray(clean), np.asarray(noisy)
    if clean.shape != noisy.shape:
        raise ShapeError(f"clean {clean.shape} and noisy {noisy.shape} differ")
    noise_power = float(np.mean((noisy - clean) ** 2))
    if noise_power == 0.0:
        raise PreconditionError("zero noise power: SNR is infinite")
    return float(np.mean(clean**2)) / noise_power


def redundant_frame(rng: np.random.Generator, H: int, W: int, sigma_data: float) -> np.ndarray:
    """Low-frequency 2-D cosine pattern with mean power sigma_data^2."""
    fy, fx = rng.integers(1, 3, size=2)
    py, px = rng.uniform(0.0, 2.0 * np.pi, size=2)
    rows = np.cos(2.0 * np.pi * fy * np.arange(H) / H + py)
    cols = np.cos(2.0 * np.pi * fx * np.arange(W) / W + px)
    return 2.0 * sigma_data * np.outer(rows, cols)


def redundant_video(frame: np.ndarray, T: int, s: int) -> np.ndarray:
    """Replicate a frame over T frames and upsample it by s (nearest)."""
    return repeat(frame, "h w -> t (h s1) (w s2)", t=T, s1=s, s2=s)


def snr_scaling_experiment(
    T: int,
    s: int,
    sigma: float,
    scale_input: bool,
    trials: int,
    seed: int = 0,
    H: int = 32,
    W: int = 32,
    sigma_data: float = 1.0,
) -> SnrReport:
    """Measure how block averaging changes SNR, with or without input scaling.

    Args:
        T: Frames per block
        s: Spatial upsampling factor
        sigma: Diffusion noise level
        scale_input: Divide the clean signal by s * sqrt(T) before adding noise
        trials: Independent videos, each with its own RNG stream
        seed: Master seed the per-trial streams derive from
        H: Low-resolution height
        W: Low-resolution width
        sigma_data: Standard deviation of the synthetic signal

    Returns:
        SnrReport whose ``snr_reference`` is the SNR of one unscaled
        low-resolution frame at the same sigma
    """
    if trials < 1:
        raise PreconditionError(f"trials must be >= 1, got {trials}")
    if trials < STABLE_TRIALS:
        logger.warning("snr_few_trials", trials=trials, recommended=STABLE_TRIALS)
    if T < 1 or s < 1 or sigma <= 0.0:
        raise PreconditionError(f"invalid cell T={T} s={s} sigma={sigma}")

    sigma_in = s * np.sqrt(T) if scale_input else 1.0
    power = {"full_signal": 0.0, "full_noise": 0.0, "avg_signal": 0.0, "avg_noise": 0.0}
    power.update(ref_signal=0.0, ref_noise=0.0)

    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        frame = redundant_frame(rng, H, W, sigma_data)
        clean = redundant_video(frame, T, s) / sigma_in
        noise = sigma * rng.standard_normal(clean.shape)

        clean_avg = block_average(clean, T, s)
        noisy_avg = block_average(clean + noise, T, s)
        ref_noise = sigma * rng.standard_normal(frame.shape)

        power["full_signal"] += float(np.sum(clean**2)) / clean.size
        power["full_noise"] += float(np.sum(noise**2)) / noise.size
        power["avg_signal"] += float(np.sum(clean_avg**2)) / clean_avg.size
        power["avg_noise"] += float(np.sum((noisy_avg - clean_avg) ** 2)) / clean_avg.size
        power["ref_signal"] += float(np.sum(frame**2)) / frame.size
        power["ref_noise"] += float(np.sum(ref_noise**2)) / frame.size

    snr_full = power["full_signal"] / power["full_noise"]
    snr_avg = power["avg_signal"] / power["avg_noise"]
    report = SnrReport(
        T=T,
        s=s,
        sigma=float(sigma),
        scaled=scale_input,
        snr_full=snr_full,
        snr_avg=snr_avg,
        ratio=snr_avg / snr_full,
        predicted_ratio=float(T * s * s),
        snr_reference=power["ref_signal"] / power["ref_noise"],
    )
    logger.debug("snr_cell", T=T, s=s, scaled=scale_input, ratio=report.ratio)
    return report


def averaged_noise_variance(
    T: int, s: int, sigma: float, samples: int, rng: np.random.Generator
) -> float:
    """Empirical variance of block-averaged N(0, sigma^2) noise over ``samples`` blocks."""
    noise = sigma * rng.standard_normal((samples, T, s, s))
    return float(np.var(noise.mean(axis=(1, 2, 3))))


def snr_grid(
    Ts: Sequence[int],
    ss: Sequence[int],
    sigma: float,
    trials: int,
    seed: int = 0,
    scaled: Iterable[bool] = (False, True),
) -> list[SnrReport]:
    """Run every (T, s, scaled) cell."""
    rows = [
        snr_scaling_experiment(T, s, sigma, flag, trials, seed=seed)
        for T in Ts
        for s in ss
        for flag in scaled
    ]
    logger.info("snr_grid_complete", cells=len(rows), sigma=sigma, trials=trials)
    return rows


def write_snr_csv(rows: Sequence[SnrReport], path: str | Path) -> Path:
    with CsvWriter(path, SNR_COLUMNS) as writer:
        for row in rows:
            writer.write(row.as_row())
    return Path(path)
