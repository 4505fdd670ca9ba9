"""Loading trained weights and writing sampled videos."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog

from src.config.run_config import RunConfig, parse_config
from src.core.exceptions import PreconditionError, UsageError
from src.models.fit.network import FitNetwork
from src.models.fit.params import FitParams
from src.sampling.config import SamplerConfig
from src.sampling.denoisers import Conditioning, FitDenoiserModel
from src.sampling.hierarchical import check_total_frames, hierarchical_generate, level_strides
from src.sampling.sampler import sample
from src.storage.checkpoint import load_checkpoint
from src.storage.media import export_sample
from src.utils.validators import validate_class_id

logger = structlog.get_logger(__name__)


@dataclass
class TrainedModel:
    run: RunConfig
    params: FitParams
    step: int

    @classmethod
    def load(cls, path: str | Path, use_ema: bool = True) -> "TrainedModel":
        """Read a checkpoint and the run config echoed inside it."""
        checkpoint = load_checkpoint(path)
        run = parse_config(checkpoint.config_text)
        state = checkpoint.state
        params = state.ema.shadow if use_ema else state.params
        return cls(run=run, params=params, step=state.step)

    def denoiser(self) -> FitDenoiserModel:
        return FitDenoiserModel(FitNetwork(self.run.fit()), self.params, self.run.diffusion())

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        return self.run.channels, self.run.height, self.run.width


class GenerationService:
    """Samples class-conditional videos from a trained model."""

    def __init__(self, model: TrainedModel, scfg: SamplerConfig):
        self.model = model
        self.scfg = scfg

    def conditioning(self, batch: int, class_id: int, framerate: float) -> Conditioning:
        validate_class_id(class_id, self.model.run.n_classes)
        return Conditioning.build(batch, class_id, framerate, (self.model.run.height, self.model.run.width))

    def hierarchy_frames(self, levels: tuple[int, ...], total_frames: int | None = None) -> int:
        """Output length of a hierarchical run; defaults to one lowest-rate window.

        Raises:
            UsageError: If the levels do not nest or ``total_frames`` cannot fill a window
        """
        T = self.model.run.frames
        try:
            total = total_frames or T * (level_strides(levels)[0])
            check_total_frames(total, levels, T)
        except PreconditionError as e:
            raise UsageError(str(e)) from e
        return total

    def generate(
        self,
        class_id: int,
        batch: int = 1,
        framerate: float | None = None,
        levels: tuple[int, ...] | None = None,
        total_frames: int | None = None,
    ) -> np.ndarray:
        """Videos ``(B, frames, C, H, W)``; hierarchical when ``levels`` is given."""
        run = self.model.run
        nu = run.base_framerate if framerate is None else framerate
        cond = self.conditioning(batch, class_id, nu)
        if levels is None:
            shape = (batch, run.frames) + self.model.frame_shape
            return sample(self.model.denoiser(), cond, self.scfg, run.diffusion(), shape)
        return hierarchical_generate(
            self.model.denoiser(),
            cond,
            self.hierarchy_frames(levels, total_frames),
            levels,
            self.scfg,
            run.diffusion(),
            self.model.frame_shape,
            run.frames,
        )

    @staticmethod
    def export(videos: np.ndarray, out_dir: str | Path, name: str) -> list[Path]:
        written: list[Path] = []
        for i, video in enumerate(videos):
            written += export_sample(out_dir, f"{name}_{i:02d}", video)
        logger.info("samples_written", out_dir=str(out_dir), videos=len(videos), files=len(written))
        return written
