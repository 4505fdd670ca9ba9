"""Named parameter store."""

from collections.abc import Iterator, Mapping

import numpy as np

from src.core.exceptions import ConfigurationError, ShapeError
from src.tensor.tensor import Tensor


class FitParams(Mapping[str, np.ndarray]):
    """Learnable arrays keyed by unique dotted names.

    Arrays are float32 and treated as values: updates build a new store.
    ``tensors`` wraps them as fresh graph leaves for one forward pass.
    """

    def __init__(self, arrays: Mapping[str, np.ndarray] | None = None):
        self._arrays: dict[str, np.ndarray] = {}
        for name, value in (arrays or {}).items():
            self.add(name, value)

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self._arrays:
            raise ConfigurationError(f"parameter registered twice: {name}")
        array = np.array(value, dtype=np.float32, copy=True)
        array.flags.writeable = False
        self._arrays[name] = array

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def numel(self) -> int:
        return sum(int(a.size) for a in self._arrays.values())

    def tensors(self, requires_grad: bool = False, dtype: np.dtype | str | None = None) -> dict[str, Tensor]:
        return {
            name: Tensor(array, requires_grad=requires_grad, dtype=dtype, name=name)
            for name, array in self._arrays.items()
        }

    def replace(self, updates: Mapping[str, np.ndarray]) -> "FitParams":
        """New store with some arrays swapped; shapes must not change."""
        merged = dict(self._arrays)
        for name, value in updates.items():
            if name not in merged:
                raise ConfigurationError(f"unknown parameter: {name}")
            if np.shape(value) != merged[name].shape:
                raise ShapeError(f"{name}: shape {np.shape(value)} != {merged[name].shape}")
            merged[name] = value
        return FitParams(merged)

    def copy(self) -> "FitParams":
        return FitParams(self._arrays)

    def allclose(self, other: Mapping[str, np.ndarray], atol: float = 0.0) -> bool:
        if set(self) != set(other):
            return False
        return all(np.allclose(self[k], other[k], rtol=0.0, atol=atol) for k in self)

    def equal(self, other: Mapping[str, np.ndarray]) -> bool:
        return set(self) == set(other) and all(np.array_equal(self[k], other[k]) for k in self)
