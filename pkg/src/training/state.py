"""Complete resumable training state."""

from dataclasses import dataclass

from src.models.fit.params import FitParams
from src.training.ema import EmaState
from src.training.optim import OptimizerMode, OptimizerState


@dataclass
class TrainState:
    """Everything needed to continue training bitwise from ``step``."""

    params: FitParams
    opt: OptimizerState
    ema: EmaState
    step: int
    seed: int

    @classmethod
    def fresh(cls, params: FitParams, mode: OptimizerMode, halflife: float, seed: int) -> "TrainState":
        return cls(
            params=params,
            opt=OptimizerState.zeros_like(params, mode),
            ema=EmaState(params.copy(), halflife),
            step=0,
            seed=seed,
        )
