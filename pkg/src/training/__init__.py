"""Desk-scale joint image/video training."""

from src.training.batch import VideoBatch, images_as_videos
from src.training.config import TrainConfig
from src.training.dataset import NearestTemplateClassifier, SpriteDataset, make_dataset
from src.training.ema import EmaState, ema_decay
from src.training.loader import PrefetchLoader
from src.training.optim import (
    OptimizerMode,
    OptimizerState,
    clip_by_global_norm,
    cosine_lr,
    global_norm,
    optimizer_update,
    trust_ratio,
)
from src.training.state import TrainState
from src.training.trainer import METRIC_COLUMNS, StepResult, Trainer, step_rng, train_step

__all__ = [
    "METRIC_COLUMNS",
    "EmaState",
    "NearestTemplateClassifier",
    "OptimizerMode",
    "OptimizerState",
    "PrefetchLoader",
    "SpriteDataset",
    "StepResult",
    "TrainConfig",
    "TrainState",
    "Trainer",
    "VideoBatch",
    "clip_by_global_norm",
    "cosine_lr",
    "ema_decay",
    "global_norm",
    "images_as_videos",
    "make_dataset",
    "optimizer_update",
    "step_rng",
    "train_step",
    "trust_ratio",
]
