"""Central-difference gradient verification."""

from collections.abc import Callable, Sequence

import numpy as np

from src.core.exceptions import PreconditionError
from src.tensor.tensor import Tensor


def numerical_gradient(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    h: float,
    indices: Sequence[int] | None = None,
) -> np.ndarray:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for the chosen coordinates."""
    flat = x.data.reshape(-1)
    coords = range(flat.size) if indices is None else indices
    result = np.zeros(len(coords), dtype=np.float64)
    for j, i in enumerate(coords):
        plus = flat.copy()
        plus[i] += h
        minus = flat.copy()
        minus[i] -= h
        f_plus = f(Tensor(plus.reshape(x.shape), dtype=x.dtype)).item()
        f_minus = f(Tensor(minus.reshape(x.shape), dtype=x.dtype)).item()
        result[j] = (f_plus - f_minus) / (2.0 * h)
    return result


def grad_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    h: float = 1e-4,
    indices: Sequence[int] | None = None,
) -> float:
    """Compare backward's gradient of ``f`` at ``x`` against central differences.

    Args:
        f: Deterministic map from a tensor to a scalar tensor
        x: Point of evaluation (finite)
        h: Finite-difference step, must be positive
        indices: Optional flat coordinates to check; all coordinates when omitted

    Returns:
        max |a - b| / max(|a|, |b|, 1e-8) over the checked coordinates

    Raises:
        PreconditionError: If h is not positive
    """
    if not h > 0.0:
        raise PreconditionError(f"finite-difference step must be positive, got {h}")

    leaf = Tensor(x.data, requires_grad=True, dtype=x.dtype)
    f(leaf).backward()
    analytic = np.zeros(x.size) if leaf.grad is None else leaf.grad.reshape(-1)
    if indices is not None:
        analytic = analytic[np.asarray(indices, dtype=np.int64)]

    numeric = numerical_gradient(f, x, h, indices)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / denom))
