"""Differentiable primitives beyond the arithmetic operators on ``Tensor``."""

from collections.abc import Sequence
from typing import Any, Literal

import numpy as np

from src.core.exceptions import PreconditionError, ShapeError
from src.tensor import parallel
from src.tensor.context import record_macs
from src.tensor.tensor import Tensor, broadcast_shape, unbroadcast

LAYER_NORM_EPS = 1e-5

# tanh approximation of GELU: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
GELU_C = float(np.sqrt(2.0 / np.pi))
GELU_A = 0.044715

EwiseKind = Literal["add", "sub", "mul", "scale", "gelu"]


def constant(data: Any, dtype: Any = None) -> Tensor:
    """Tensor that never requires grad."""
    return Tensor(data, requires_grad=False, dtype=dtype)


def ewise(kind: EwiseKind, a: Tensor, b: Any = None) -> Tensor:
    """Elementwise primitive dispatch used by the verification suite."""
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "scale":
        if isinstance(b, Tensor) or np.ndim(b) != 0:
            raise PreconditionError("scale expects a scalar constant")
        return a * float(b)
    if kind == "gelu":
        return gelu(a)
    raise PreconditionError(f"unknown elementwise kind: {kind}")


def gelu(x: Tensor) -> Tensor:
    v = x.data
    inner = GELU_C * (v + GELU_A * v**3)
    t = np.tanh(inner)
    out = 0.5 * v * (1.0 + t)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        d_inner = GELU_C * (1.0 + 3.0 * GELU_A * v * v)
        return (g * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * d_inner),)

    return Tensor.from_op("gelu", out, (x,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product ``a[..., m, k] @ b[..., k, n]``."""
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    batch = broadcast_shape("matmul", a.shape[:-2], b.shape[:-2])

    m, k = a.shape[-2:]
    n = b.shape[-1]
    record_macs(int(np.prod(batch, dtype=np.int64)) * m * k * n)

    a_data, b_data = a.data, b.data

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grad_a = unbroadcast(np.matmul(g, np.swapaxes(b_data, -1, -2)), a_data.shape)
        grad_b = unbroadcast(np.matmul(np.swapaxes(a_data, -1, -2), g), b_data.shape)
        return grad_a, grad_b

    return Tensor.from_op("matmul", parallel.matmul(a_data, b_data), (a, b), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    if not -x.ndim <= axis < x.ndim:
        raise PreconditionError(f"axis {axis} out of range for shape {x.shape}")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op("softmax", out, (x,), backward)


def layer_norm(
    x: Tensor,
    gain: Tensor | None = None,
    bias: Tensor | None = None,
    eps: float = LAYER_NORM_EPS,
) -> Tensor:
    """Normalize over the trailing dimension, then apply gain and bias."""
    width = x.shape[-1]
    for param, label in ((gain, "gain"), (bias, "bias")):
        if param is not None and param.shape != (width,):
            raise ShapeError(f"layer_norm {label} shape {param.shape} != ({width},)")

    v = x.data
    mu = v.mean(axis=-1, keepdims=True)
    centered = v - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = centered * rstd
    g_data = gain.data if gain is not None else None
    out = xhat if g_data is None else xhat * g_data
    if bias is not None:
        out = out + bias.data

    def backward(g: np.ndarray) -> tuple[np.ndarray | None, ...]:
        lead = tuple(range(g.ndim - 1))
        dxhat = g if g_data is None else g * g_data
        dx = rstd * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        d_gain = (g * xhat).sum(axis=lead) if gain is not None else None
        d_bias = g.sum(axis=lead) if bias is not None else None
        return dx, d_gain, d_bias

    parents = [x]
    grads_for = [True, gain is not None, bias is not None]
    if gain is not None:
        parents.append(gain)
    if bias is not None:
        parents.append(bias)

    def packed(g: np.ndarray) -> list[np.ndarray | None]:
        dx, d_gain, d_bias = backward(g)
        return [grad for grad, keep in zip((dx, d_gain, d_bias), grads_for) if keep]

    return Tensor.from_op("layer_norm", out, parents, packed)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise PreconditionError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            i != axis and s != r for i, (s, r) in enumerate(zip(t.shape, tensors[0].shape))
        ):
            raise ShapeError(f"concat shapes disagree off axis {axis}: {[t.shape for t in tensors]}")
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return np.split(g, splits, axis=axis)

    return Tensor.from_op(
        "concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, backward
    )


def take(table: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows of a 2-D table; backward scatter-adds into the rows used."""
    if table.ndim != 2:
        raise ShapeError(f"take expects a 2-D table, got {table.shape}")
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise PreconditionError(f"row index out of range for table of {table.shape[0]} rows")
    shape = table.shape

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros(shape, dtype=g.dtype)
        np.add.at(grad, idx.reshape(-1), g.reshape(-1, shape[1]))
        return (grad,)

    return Tensor.from_op("take", table.data[idx], (table,), backward)


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout; identity outside training or when ``p == 0``."""
    if not training or p <= 0.0 or rng is None:
        return x
    if p >= 1.0:
        raise PreconditionError("dropout probability must be < 1")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    return x * keep
