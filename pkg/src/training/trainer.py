"""Joint image/video training loop."""

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog
from einops import reduce
from tqdm import tqdm

from src.core.exceptions import ConfigurationError, NonFiniteError, NonFiniteLossError
from src.diffusion.config import DiffusionConfig
from src.diffusion.framework import forward_process, loss_f, network_input
from src.diffusion.noise import sample_sigma, standard_normal
from src.models.fit.conditioning import cascade_condition
from src.models.fit.config import FitConfig
from src.models.fit.network import FitNetwork
from src.training.batch import VideoBatch
from src.training.config import TrainConfig
from src.training.dataset import SpriteDataset
from src.training.ema import EmaState
from src.training.loader import PrefetchLoader
from src.training.optim import OptimizerState, cosine_lr, optimizer_update
from src.training.state import TrainState
from src.utils.metrics import CsvWriter, MetricsCollector

logger = structlog.get_logger(__name__)

METRIC_COLUMNS = ("step", "lr", "sigma_mean", "loss", "grad_norm", "wall_ms")

# Stream tags keep batch content and step noise independent.
_BATCH_STREAM = 0
_STEP_STREAM = 1

CASCADE_FACTOR = 2
CASCADE_AUG_MAX = 1.0


@dataclass
class StepResult:
    loss: float
    lr: float
    grad_norm: float
    sigma_mean: float


def step_rng(seed: int, step: int, stream: int) -> np.random.Generator:
    """Generator determined by (seed, step, stream) alone."""
    return np.random.default_rng([seed, step, stream])


def cascade_inputs(
    pixels: np.ndarray, rng: np.random.Generator, cfg: FitConfig
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Noise-augmented low-resolution copy of the batch for a cascade network."""
    if not cfg.cascade:
        return None, None
    C = pixels.shape[2]
    if cfg.lowres_channels != C:
        raise ConfigurationError(f"cascade training needs lowres_channels == {C}")
    f = CASCADE_FACTOR
    low = reduce(pixels, "b t c (h fh) (w fw) -> b t c h w", "mean", fh=f, fw=f)
    aug_sigma = rng.uniform(0.0, CASCADE_AUG_MAX, size=pixels.shape[0])
    cond = cascade_condition(low, aug_sigma, rng, size=pixels.shape[-2:])
    return cond.channels, cond.aug_sigma


def train_step(
    network: FitNetwork,
    state: TrainState,
    batch: VideoBatch,
    dcfg: DiffusionConfig,
    tcfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[TrainState, StepResult]:
    """One optimizer step on a joint image/video batch.

    Images and videos share every line of the loss computation.

    Raises:
        NonFiniteLossError: If the forward pass or loss is not finite
    """
    cfg = network.cfg
    B = len(batch)
    sigma = np.asarray(sample_sigma(rng, dcfg, size=B), dtype=np.float64)
    eps = standard_normal(rng, batch.pixels.shape)
    x_sigma = forward_process(batch.pixels, sigma, eps, dcfg)
    x_in = network_input(x_sigma, sigma, dcfg)

    drop = rng.random(B) < cfg.label_dropout
    cond_id = np.where(drop, 0, batch.cond_id)
    use_self_cond = bool(rng.random() < cfg.self_cond_prob)
    lowres, aug_sigma = cascade_inputs(batch.pixels, rng, cfg)

    p = state.params.tensors(requires_grad=True)
    try:
        f_out, _ = network.self_conditioned_forward(
            p,
            x_in,
            sigma,
            batch.framerate,
            batch.resolution,
            cond_id,
            use_self_cond,
            lowres=lowres,
            aug_sigma=aug_sigma,
            training=True,
            rng=rng,
        )
        loss = loss_f(f_out, batch.pixels, eps, sigma, dcfg)
        loss.backward()
    except NonFiniteError as e:
        raise NonFiniteLossError(state.step, sigma.tolist()) from e

    # Parameters the graph never reached (e.g. unused class rows) get zero gradient.
    grads = {
        name: t.grad if t.grad is not None else np.zeros(t.shape, dtype=np.float32) for name, t in p.items()
    }
    lr = cosine_lr(state.step, tcfg.warmup, tcfg.steps, tcfg.lr)
    params, opt, norm = optimizer_update(
        state.opt,
        state.params,
        grads,
        lr,
        betas=tcfg.betas,
        eps=tcfg.eps,
        weight_decay=tcfg.weight_decay,
        clip_norm=tcfg.clip_norm,
    )
    new_state = TrainState(params, opt, state.ema.update(params), state.step + 1, state.seed)
    return new_state, StepResult(loss.item(), lr, norm, float(sigma.mean()))


class Trainer:
    """Runs training with prefetching, metrics CSV, checkpoints and resume."""

    def __init__(
        self,
        fit_cfg: FitConfig,
        dcfg: DiffusionConfig,
        tcfg: TrainConfig,
        output_dir: str | Path,
        config_text: str = "",
    ):
        self.network = FitNetwork(fit_cfg)
        self.dcfg = dcfg
        self.tcfg = tcfg
        self.output_dir = Path(output_dir)
        self.config_text = config_text
        T, H, W, C = fit_cfg.input_shape
        self.dataset = SpriteDataset(
            T=T,
            H=H,
            W=W,
            C=C,
            n_classes=fit_cfg.n_classes,
            base_framerate=tcfg.base_framerate,
            rate_factors=tcfg.rate_factors,
            image_framerate=tcfg.image_framerate,
        )
        self.metrics = MetricsCollector()

    @property
    def metrics_path(self) -> Path:
        return self.output_dir / "metrics.csv"

    def checkpoint_path(self, step: int) -> Path:
        return self.output_dir / f"checkpoint_{step:06d}.ckpt"

    @property
    def last_checkpoint_path(self) -> Path:
        return self.output_dir / "last.ckpt"

    def init_state(self) -> TrainState:
        params = self.network.init(self.tcfg.seed)
        return TrainState(
            params=params,
            opt=OptimizerState.zeros_like(params, self.tcfg.optimizer),
            ema=EmaState(params.copy(), self.tcfg.ema_halflife),
            step=0,
            seed=self.tcfg.seed,
        )

    def make_batch(self, step: int) -> VideoBatch:
        rng = step_rng(self.tcfg.seed, step, _BATCH_STREAM)
        return self.dataset.batch(rng, self.tcfg.batch_videos, self.tcfg.batch_images)

    def save(self, state: TrainState) -> Path:
        from src.storage.checkpoint import save_checkpoint

        path = save_checkpoint(self.checkpoint_path(state.step), state, self.config_text)
        save_checkpoint(self.last_checkpoint_path, state, self.config_text)
        return path

    def run(
        self,
        resume: str | Path | None = None,
        stop_after: int | None = None,
        progress: bool | None = None,
    ) -> TrainState:
        """Train from scratch or from ``resume`` until ``stop_after`` (default: the schedule end).

        Args:
            resume: Checkpoint to continue from
            stop_after: Step at which to stop early; the schedule still spans ``tcfg.steps``
            progress: Force the progress bar on or off; auto-detects a TTY when None

        Returns:
            Final training state (also written as a checkpoint)
        """
        # storage depends on the training types, so it is imported late
        from src.storage.checkpoint import load_checkpoint

        self.output_dir.mkdir(parents=True, exist_ok=True)
        state = load_checkpoint(resume).state if resume is not None else self.init_state()
        if state.seed != self.tcfg.seed:
            raise ConfigurationError(f"checkpoint seed {state.seed} != configured seed {self.tcfg.seed}")
        stop = self.tcfg.steps if stop_after is None else min(stop_after, self.tcfg.steps)
        logger.info(
            "training_started",
            start=state.step,
            stop=stop,
            params=state.params.numel(),
            resumed=resume is not None,
        )

        loader = PrefetchLoader(self.make_batch, state.step, stop, depth=self.tcfg.prefetch)
        with CsvWriter(self.metrics_path, METRIC_COLUMNS, append=resume is not None) as writer:
            bar = tqdm(total=stop - state.step, disable=None if progress is None else not progress)
            try:
                for step, batch in loader:
                    started = time.perf_counter()
                    rng = step_rng(self.tcfg.seed, step, _STEP_STREAM)
                    state, result = train_step(self.network, state, batch, self.dcfg, self.tcfg, rng)
                    wall_ms = (time.perf_counter() - started) * 1000.0

                    smoothed = self.metrics.observe("loss", result.loss)
                    self.metrics.increment("steps")
                    writer.write(
                        {
                            "step": step,
                            "lr": result.lr,
                            "sigma_mean": result.sigma_mean,
                            "loss": result.loss,
                            "grad_norm": result.grad_norm,
                            "wall_ms": wall_ms,
                        }
                    )
                    bar.update(1)
                    bar.set_postfix(loss=f"{smoothed:.3f}")
                    if state.step % self.tcfg.log_every == 0:
                        logger.info("train_step", step=state.step, loss=result.loss, smoothed=smoothed, lr=result.lr)
                    if state.step % self.tcfg.checkpoint_every == 0 and state.step < stop:
                        self.save(state)
            finally:
                bar.close()
                loader.close()

        self.save(state)
        logger.info("training_finished", step=state.step, loss_smoothed=self.metrics.metrics.get("loss_smoothed"))
        return state
