"""Thread-local execution state for the tensor engine.

Precision, graph recording, serial execution and MAC accounting are all
scoped with context managers so that a verification suite can run in
64-bit serial mode while a training loop in another thread keeps its own
settings.
"""

import threading
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from src.config.settings import settings

_state = threading.local()

SUPPORTED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


def default_dtype() -> np.dtype:
    """Dtype used when constructing tensors from non-float data."""
    return getattr(_state, "dtype", SUPPORTED_DTYPES[0])


@contextmanager
def precision(dtype: str | np.dtype | type) -> Iterator[np.dtype]:
    """Temporarily switch the construction dtype ("float32" or "float64")."""
    resolved = np.dtype(dtype)
    if resolved not in SUPPORTED_DTYPES:
        raise ValueError(f"unsupported precision: {resolved}")
    previous = default_dtype()
    _state.dtype = resolved
    try:
        yield resolved
    finally:
        _state.dtype = previous


def grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    previous = grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def is_serial() -> bool:
    return bool(getattr(_state, "serial", False) or settings.serial or settings.threads <= 1)


@contextmanager
def serial_mode() -> Iterator[None]:
    """Force single-threaded kernels for bit-reproducible results."""
    previous = getattr(_state, "serial", False)
    _state.serial = True
    try:
        yield
    finally:
        _state.serial = previous


@dataclass
class MacCounter:
    """Running multiply-accumulate total for matmuls executed in scope."""

    total: int = 0

    def add(self, macs: int) -> None:
        self.total += int(macs)


@contextmanager
def mac_counter() -> Iterator[MacCounter]:
    """Count matmul multiply-accumulates executed inside the block."""
    counter = MacCounter()
    stack = getattr(_state, "mac_counters", None)
    if stack is None:
        stack = _state.mac_counters = []
    stack.append(counter)
    try:
        yield counter
    finally:
        stack.pop()


def record_macs(macs: int) -> None:
    for counter in getattr(_state, "mac_counters", ()):
        counter.add(macs)
