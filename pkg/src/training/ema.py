"""Exponential moving average of parameters."""

from dataclasses import dataclass

import numpy as np

from src.models.fit.params import FitParams


def ema_decay(halflife: float) -> float:
    """Per-step decay 0.5^(1/halflife); a halflife of 0 gives decay 0."""
    if halflife <= 0.0:
        return 0.0
    return 0.5 ** (1.0 / halflife)


@dataclass
class EmaState:
    shadow: FitParams
    halflife: float

    @property
    def decay(self) -> float:
        return ema_decay(self.halflife)

    def update(self, params: FitParams) -> "EmaState":
        """shadow + (1 - decay) * (params - shadow); decay 0 copies the parameters."""
        d = self.decay
        if d == 0.0:
            return EmaState(params.copy(), self.halflife)
        rate = np.float32(1.0 - d)
        shadow = {
            name: (s + rate * (params[name] - s)).astype(np.float32) for name, s in self.shadow.items()
        }
        return EmaState(FitParams(shadow), self.halflife)
