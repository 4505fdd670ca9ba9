"""Dense tensor with reverse-mode differentiation.

A ``Tensor`` wraps a read-only NumPy array. Every primitive that touches a
tensor with ``requires_grad`` records a ``Node`` holding its parents and a
backward closure; ``Tensor.backward`` walks the ``Graph`` of those nodes in
reverse topological order and accumulates gradients additively across
fan-out. Only leaves (tensors created by the user with ``requires_grad``)
keep a ``grad`` buffer.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from src.core.exceptions import GraphError, NonFiniteError, ShapeError
from src.tensor.context import default_dtype, grad_enabled

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]
Axis = int | tuple[int, ...] | None


@dataclass(eq=False)
class Node:
    """One recorded primitive application."""

    op: str
    parents: tuple[Tensor, ...]
    backward: BackwardFn


def check_finite(data: np.ndarray, op: str) -> None:
    if not np.isfinite(data).all():
        raise NonFiniteError(op)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def broadcast_shape(op: str, *shapes: tuple[int, ...]) -> tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(*shapes))
    except ValueError as e:
        raise ShapeError(f"{op}: shapes {shapes} are not broadcastable") from e


class Tensor:
    """Dense n-dimensional array of reals with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "node", "name")

    # Make NumPy defer to our reflected operators (ndarray * Tensor).
    __array_ufunc__ = None

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        dtype: Any = None,
        name: str | None = None,
    ):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            is_float_array = isinstance(data, np.ndarray) and data.dtype.kind == "f"
            dtype = data.dtype if is_float_array else default_dtype()
        array = np.array(data, dtype=dtype, copy=True)
        check_finite(array, "tensor")
        array.flags.writeable = False
        self.data: np.ndarray = array
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.node: Node | None = None
        self.name = name

    @classmethod
    def wrap(cls, data: np.ndarray) -> Tensor:
        """Adopt a freshly computed array without copying it."""
        out = cls.__new__(cls)
        data = np.asarray(data)
        if not data.flags.writeable:
            data = data.copy()
        data.flags.writeable = False
        out.data = data
        out.requires_grad = False
        out.grad = None
        out.node = None
        out.name = None
        return out

    # *** properties ***
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def __repr__(self) -> str:
        req = ", requires_grad=True" if self.requires_grad else ""
        nm = f", name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{req}{nm})"

    def __len__(self) -> int:
        return self.shape[0]

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor.wrap(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # *** graph ***
    @staticmethod
    def from_op(op: str, data: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn) -> Tensor:
        """Build the result of a primitive, recording a node when needed."""
        check_finite(data, op)
        out = Tensor.wrap(data)
        if grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out.node = Node(op, tuple(parents), backward)
        return out

    def backward(self) -> None:
        """Populate ``grad`` on every leaf reachable from this scalar."""
        if self.ndim != 0:
            raise GraphError(f"backward needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise GraphError("loss is detached from any tensor requiring grad")

        graph = Graph.from_root(self)
        pending: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for tensor in graph.reverse():
            grad = pending.pop(id(tensor), None)
            if grad is None:
                continue
            if tensor.node is None:
                tensor.grad = np.array(grad, copy=True) if tensor.grad is None else tensor.grad + grad
                continue
            for parent, parent_grad in zip(tensor.node.parents, tensor.node.backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if parent_grad.shape != parent.shape:
                    raise GraphError(
                        f"{tensor.node.op}: gradient shape {parent_grad.shape} "
                        f"!= input shape {parent.shape}"
                    )
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    # *** elementwise ***
    def _coerce(self, other: Any) -> Tensor:
        if isinstance(other, Tensor):
            return other
        return Tensor.wrap(np.asarray(other, dtype=self.dtype).copy())

    def __add__(self, other: Any) -> Tensor:
        other = self._coerce(other)
        broadcast_shape("add", self.shape, other.shape)
        a_shape, b_shape = self.shape, other.shape
        return Tensor.from_op(
            "add",
            self.data + other.data,
            (self, other),
            lambda g: (unbroadcast(g, a_shape), unbroadcast(g, b_shape)),
        )

    def __radd__(self, other: Any) -> Tensor:
        return self._coerce(other) + self

    def __sub__(self, other: Any) -> Tensor:
        other = self._coerce(other)
        broadcast_shape("sub", self.shape, other.shape)
        a_shape, b_shape = self.shape, other.shape
        return Tensor.from_op(
            "sub",
            self.data - other.data,
            (self, other),
            lambda g: (unbroadcast(g, a_shape), unbroadcast(-g, b_shape)),
        )

    def __rsub__(self, other: Any) -> Tensor:
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> Tensor:
        other = self._coerce(other)
        broadcast_shape("mul", self.shape, other.shape)
        a, b = self.data, other.data
        return Tensor.from_op(
            "mul",
            a * b,
            (self, other),
            lambda g: (unbroadcast(g * b, a.shape), unbroadcast(g * a, b.shape)),
        )

    def __rmul__(self, other: Any) -> Tensor:
        return self._coerce(other) * self

    def __truediv__(self, other: Any) -> Tensor:
        other = self._coerce(other)
        broadcast_shape("div", self.shape, other.shape)
        a, b = self.data, other.data
        return Tensor.from_op(
            "div",
            a / b,
            (self, other),
            lambda g: (unbroadcast(g / b, a.shape), unbroadcast(-g * a / (b * b), b.shape)),
        )

    def __rtruediv__(self, other: Any) -> Tensor:
        return self._coerce(other) / self

    def __neg__(self) -> Tensor:
        return Tensor.from_op("neg", -self.data, (self,), lambda g: (-g,))

    def __matmul__(self, other: Any) -> Tensor:
        from src.tensor.ops import matmul

        return matmul(self, self._coerce(other))

    def __rmatmul__(self, other: Any) -> Tensor:
        from src.tensor.ops import matmul

        return matmul(self._coerce(other), self)

    def exp(self) -> Tensor:
        out = np.exp(self.data)
        return Tensor.from_op("exp", out, (self,), lambda g: (g * out,))

    def tanh(self) -> Tensor:
        out = np.tanh(self.data)
        return Tensor.from_op("tanh", out, (self,), lambda g: (g * (1.0 - out * out),))

    # *** reductions ***
    def sum(self, axis: Axis = None, keepdims: bool = False) -> Tensor:
        shape = self.shape
        axes = _normalize_axes(axis, self.ndim)

        def backward(g: np.ndarray) -> tuple[np.ndarray]:
            if not keepdims:
                g = np.expand_dims(g, axes)
            return (np.broadcast_to(g, shape),)

        return Tensor.from_op("sum", self.data.sum(axis=axes, keepdims=keepdims), (self,), backward)

    def mean(self, axis: Axis = None, keepdims: bool = False) -> Tensor:
        axes = _normalize_axes(axis, self.ndim)
        count = int(np.prod([self.shape[a] for a in axes])) if axes else 1
        return self.sum(axis=axes, keepdims=keepdims) * (1.0 / count)

    # *** movement ***
    def reshape(self, *shape: int | Sequence[int]) -> Tensor:
        if len(shape) == 1 and not isinstance(shape[0], int):
            shape = tuple(shape[0])
        original = self.shape
        try:
            out = self.data.reshape(shape)
        except ValueError as e:
            raise ShapeError(f"cannot reshape {original} into {shape}") from e
        return Tensor.from_op("reshape", out, (self,), lambda g: (g.reshape(original),))

    def transpose(self, *axes: int) -> Tensor:
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        return Tensor.from_op(
            "transpose", np.transpose(self.data, axes), (self,), lambda g: (np.transpose(g, inverse),)
        )

    def swapaxes(self, a: int, b: int) -> Tensor:
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return self.transpose(*axes)

    def broadcast_to(self, shape: Sequence[int]) -> Tensor:
        shape = tuple(shape)
        if broadcast_shape("broadcast_to", self.shape, shape) != shape:
            raise ShapeError(f"cannot broadcast {self.shape} to {shape}")
        original = self.shape
        return Tensor.from_op(
            "broadcast_to",
            np.broadcast_to(self.data, shape).copy(),
            (self,),
            lambda g: (unbroadcast(g, original),),
        )


def _normalize_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


@dataclass
class Graph:
    """Topologically ordered record of the nodes reachable from a root."""

    order: list[Tensor]

    @classmethod
    def from_root(cls, root: Tensor) -> Graph:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            tensor, finished = stack.pop()
            if finished:
                order.append(tensor)
                continue
            if id(tensor) in visited:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            if tensor.node is not None:
                for parent in tensor.node.parents:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return cls(order)

    def reverse(self) -> list[Tensor]:
        return list(reversed(self.order))

    def leaves(self) -> list[Tensor]:
        return [t for t in self.order if t.node is None]

    def __len__(self) -> int:
        return len(self.order)
