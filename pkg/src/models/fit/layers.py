"""Stateless layers over a name-keyed parameter map.

Each layer is a frozen description (names and widths). ``init`` registers
its arrays in a ``FitParams``; calling it reads them from a mapping of
tensors, so one description serves training, EMA evaluation and
finite-difference checks.
"""

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from src.models.fit.params import FitParams
from src.tensor import ops
from src.tensor.tensor import Tensor

Params = Mapping[str, Tensor]


@dataclass(frozen=True)
class Linear:
    name: str
    d_in: int
    d_out: int
    zero: bool = False
    bias: bool = True

    def init(self, params: FitParams, rng: np.random.Generator) -> None:
        if self.zero:
            weight = np.zeros((self.d_in, self.d_out))
        else:
            weight = rng.normal(0.0, 1.0 / np.sqrt(self.d_in), size=(self.d_in, self.d_out))
        params.add(f"{self.name}.weight", weight)
        if self.bias:
            params.add(f"{self.name}.bias", np.zeros(self.d_out))

    def __call__(self, p: Params, x: Tensor) -> Tensor:
        out = x @ p[f"{self.name}.weight"]
        return out + p[f"{self.name}.bias"] if self.bias else out

    @property
    def numel(self) -> int:
        return self.d_in * self.d_out + (self.d_out if self.bias else 0)


@dataclass(frozen=True)
class LayerNorm:
    name: str
    dim: int

    def init(self, params: FitParams, rng: np.random.Generator) -> None:
        params.add(f"{self.name}.gain", np.ones(self.dim))
        params.add(f"{self.name}.bias", np.zeros(self.dim))

    def __call__(self, p: Params, x: Tensor) -> Tensor:
        return ops.layer_norm(x, p[f"{self.name}.gain"], p[f"{self.name}.bias"])

    @property
    def numel(self) -> int:
        return 2 * self.dim


@dataclass(frozen=True)
class Attention:
    """Multi-head attention of queries (width ``dim``) over keys/values of width ``kv_dim``."""

    name: str
    dim: int
    kv_dim: int
    heads: int
    zero_out: bool = False

    @property
    def parts(self) -> tuple[Linear, Linear, Linear, Linear]:
        return (
            Linear(f"{self.name}.q", self.dim, self.dim),
            # a key bias shifts every logit of a query equally and cancels in the softmax
            Linear(f"{self.name}.k", self.kv_dim, self.dim, bias=False),
            Linear(f"{self.name}.v", self.kv_dim, self.dim),
            Linear(f"{self.name}.out", self.dim, self.dim, zero=self.zero_out),
        )

    def init(self, params: FitParams, rng: np.random.Generator) -> None:
        for part in self.parts:
            part.init(params, rng)

    def __call__(self, p: Params, x: Tensor, context: Tensor) -> Tensor:
        q_proj, k_proj, v_proj, out_proj = self.parts
        head_dim = self.dim // self.heads
        q = self._split(q_proj(p, x)) * (1.0 / np.sqrt(head_dim))
        k = self._split(k_proj(p, context))
        v = self._split(v_proj(p, context))
        weights = ops.softmax(q @ k.swapaxes(-1, -2), axis=-1)
        return out_proj(p, self._merge(weights @ v))

    def _split(self, x: Tensor) -> Tensor:
        # (..., n, heads * d) -> (..., heads, n, d)
        *lead, n, _ = x.shape
        x = x.reshape(*lead, n, self.heads, self.dim // self.heads)
        return x.swapaxes(-2, -3)

    def _merge(self, x: Tensor) -> Tensor:
        x = x.swapaxes(-2, -3)
        *lead, n, _, _ = x.shape
        return x.reshape(*lead, n, self.dim)

    @property
    def numel(self) -> int:
        return sum(part.numel for part in self.parts)


@dataclass(frozen=True)
class FeedForward:
    name: str
    dim: int
    mult: int
    dropout: float = 0.0
    zero_out: bool = False

    @property
    def parts(self) -> tuple[Linear, Linear]:
        hidden = self.dim * self.mult
        return (
            Linear(f"{self.name}.fc1", self.dim, hidden),
            Linear(f"{self.name}.fc2", hidden, self.dim, zero=self.zero_out),
        )

    def init(self, params: FitParams, rng: np.random.Generator) -> None:
        for part in self.parts:
            part.init(params, rng)

    def __call__(
        self,
        p: Params,
        x: Tensor,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        fc1, fc2 = self.parts
        hidden = ops.dropout(ops.gelu(fc1(p, x)), self.dropout, rng, training)
        return fc2(p, hidden)

    @property
    def numel(self) -> int:
        return sum(part.numel for part in self.parts)


@dataclass(frozen=True)
class Mlp:
    """Two-layer embedding MLP with a GELU in between."""

    name: str
    d_in: int
    dim: int

    @property
    def parts(self) -> tuple[Linear, Linear]:
        return Linear(f"{self.name}.fc1", self.d_in, self.dim), Linear(f"{self.name}.fc2", self.dim, self.dim)

    def init(self, params: FitParams, rng: np.random.Generator) -> None:
        for part in self.parts:
            part.init(params, rng)

    def __call__(self, p: Params, x: Tensor) -> Tensor:
        fc1, fc2 = self.parts
        return fc2(p, ops.gelu(fc1(p, x)))

    @property
    def numel(self) -> int:
        return sum(part.numel for part in self.parts)
