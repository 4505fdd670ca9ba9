"""Guidance-weight and step-count sweeps over a trained model.

Class accuracy comes from the nearest-template classifier; saturation is
the share of sampled values outside the data range [-1, 1].
"""

from collections.abc import Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import structlog

from src.diffusion.config import DiffusionConfig
from src.sampling.config import SamplerConfig, Solver
from src.sampling.denoisers import Conditioning, DenoiserModel, GaussianOracleDenoiser
from src.sampling.sampler import sample
from src.training.dataset import NearestTemplateClassifier
from src.utils.metrics import CsvWriter

logger = structlog.get_logger(__name__)

GUIDANCE_WEIGHTS = (0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0, 14.0, 16.0)
STEP_COUNTS = (8, 16, 32, 64, 128, 256)
SWEEP_COLUMNS = ("weight", "steps", "accuracy", "saturation", "saturation_thresholded")
ORACLE_COLUMNS = ("solver", "steps", "max_error")


@dataclass
class SweepRow:
    weight: float
    steps: int
    accuracy: float
    saturation: float
    saturation_thresholded: float


@dataclass
class OracleRow:
    solver: str
    steps: int
    max_error: float


def saturation_fraction(videos: np.ndarray) -> float:
    return float(np.mean(np.abs(videos) > 1.0))


class SweepService:
    """Samples ``per_class`` videos for every class at each sweep point."""

    def __init__(
        self,
        model: DenoiserModel,
        dcfg: DiffusionConfig,
        scfg: SamplerConfig,
        classifier: NearestTemplateClassifier,
        frame_shape: tuple[int, int, int],
        T: int,
        framerate: float,
        per_class: int = 4,
    ):
        self.model = model
        self.dcfg = dcfg
        self.scfg = scfg
        self.classifier = classifier
        self.frame_shape = frame_shape
        self.T = T
        self.framerate = framerate
        self.per_class = per_class

    def _samples(self, scfg: SamplerConfig) -> tuple[np.ndarray, np.ndarray]:
        videos, labels = [], []
        _, H, W = self.frame_shape
        for k in range(self.classifier.n_classes):
            cond = Conditioning.build(self.per_class, k + 1, self.framerate, (H, W))
            shape = (self.per_class, self.T) + tuple(self.frame_shape)
            videos.append(sample(self.model, cond, scfg.model_copy(update={"seed": scfg.seed + k}), self.dcfg, shape))
            labels.append(np.full(self.per_class, k))
        return np.concatenate(videos), np.concatenate(labels)

    def point(self, weight: float, steps: int) -> SweepRow:
        base = self.scfg.model_copy(update={"guidance_weight": weight, "steps": steps})
        raw, labels = self._samples(base.model_copy(update={"threshold_percentile": None}))
        thresholded, _ = self._samples(base)
        row = SweepRow(
            weight=weight,
            steps=steps,
            accuracy=self.classifier.accuracy(thresholded, labels),
            saturation=saturation_fraction(raw),
            saturation_thresholded=saturation_fraction(thresholded),
        )
        logger.info("sweep_point", **asdict(row))
        return row

    def guidance_sweep(self, weights: Sequence[float] = GUIDANCE_WEIGHTS) -> list[SweepRow]:
        return [self.point(w, self.scfg.steps) for w in weights]

    def step_sweep(self, steps: Sequence[int] = STEP_COUNTS) -> list[SweepRow]:
        return [self.point(self.scfg.guidance_weight, n) for n in steps]


def oracle_step_sweep(
    dcfg: DiffusionConfig,
    steps: Sequence[int] = STEP_COUNTS,
    samples: int = 4096,
    seed: int = 0,
) -> list[OracleRow]:
    """Distance of each solver's output from the exact probability-flow solution for Gaussian data."""
    oracle = GaussianOracleDenoiser(dcfg)
    x0 = np.random.default_rng(seed).standard_normal(samples) * dcfg.sigma_max
    exact = oracle.exact_flow(x0, 0.0) * dcfg.sigma_in
    rows = []
    for solver in Solver:
        for n in steps:
            scfg = SamplerConfig(steps=n, solver=solver, threshold_percentile=None)
            out = sample(oracle, None, scfg, dcfg, x0.shape, x_init=x0)
            rows.append(OracleRow(solver.value, n, float(np.max(np.abs(out - exact)))))
    return rows


def write_rows(rows: Sequence[SweepRow | OracleRow], columns: Sequence[str], path: str | Path) -> Path:
    with CsvWriter(path, columns) as writer:
        for row in rows:
            writer.write(asdict(row))
    return Path(path)
