"""Patch tokens and their grouping.

Videos are laid out ``(B, T, C, H, W)``. Tokens are ordered (t, row, col)
lexicographically and each token holds a patch flattened as (c, y, x).
"""

from typing import Any

import numpy as np

from src.core.exceptions import ShapeError
from src.models.fit.config import PatchGeometry
from src.tensor.tensor import Tensor


def _as_tensor(x: Any) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def patchify(x: Any, patch: tuple[int, int, int]) -> Tensor:
    """``(B, T, C, H, W)`` -> ``(B, T * H/H_p * W/W_p, C * H_p * W_p)``."""
    x = _as_tensor(x)
    if x.ndim != 5:
        raise ShapeError(f"patchify expects (B, T, C, H, W), got {x.shape}")
    B, T, C, H, W = x.shape
    geometry = PatchGeometry((T, H, W, C), patch)
    _, hp, wp = patch
    _, rows, cols = geometry.grid
    x = x.reshape(B, T, C, rows, hp, cols, wp).transpose(0, 1, 3, 5, 2, 4, 6)
    return x.reshape(B, geometry.num_tokens, geometry.patch_dim)


def unpatchify(tokens: Any, input_shape: tuple[int, int, int, int], patch: tuple[int, int, int]) -> Tensor:
    """Inverse of ``patchify`` for ``input_shape = (T, H, W, C)``."""
    tokens = _as_tensor(tokens)
    geometry = PatchGeometry(input_shape, patch)
    T, _, _, C = input_shape
    _, hp, wp = patch
    _, rows, cols = geometry.grid
    if tokens.ndim != 3 or tokens.shape[1:] != (geometry.num_tokens, geometry.patch_dim):
        raise ShapeError(
            f"expected (B, {geometry.num_tokens}, {geometry.patch_dim}) tokens, got {tokens.shape}"
        )
    B = tokens.shape[0]
    x = tokens.reshape(B, T, rows, cols, C, hp, wp).transpose(0, 1, 4, 2, 5, 3, 6)
    return x.reshape(B, T, C, rows * hp, cols * wp)


def group_tokens(tokens: Any, geometry: PatchGeometry) -> Tensor:
    """``(B, N, D)`` -> ``(B, G, N / G, D)``; each group is a T x H_g x W_g block."""
    tokens = _as_tensor(tokens)
    if geometry.group is None:
        raise ShapeError("geometry has no group size")
    if tokens.ndim != 3 or tokens.shape[1] != geometry.num_tokens:
        raise ShapeError(f"expected (B, {geometry.num_tokens}, D) tokens, got {tokens.shape}")
    B, _, D = tokens.shape
    T, _, _ = geometry.grid
    _, hg, wg = geometry.group
    gr, gc = geometry.group_grid
    x = tokens.reshape(B, T, gr, hg, gc, wg, D).transpose(0, 2, 4, 1, 3, 5, 6)
    return x.reshape(B, gr * gc, T * hg * wg, D)


def ungroup_tokens(grouped: Any, geometry: PatchGeometry) -> Tensor:
    """Inverse of ``group_tokens``."""
    grouped = _as_tensor(grouped)
    if geometry.group is None:
        raise ShapeError("geometry has no group size")
    B, G, n, D = grouped.shape
    if G != geometry.num_groups or n != geometry.tokens_per_group:
        raise ShapeError(f"grouped shape {grouped.shape} does not match {geometry}")
    T, _, _ = geometry.grid
    _, hg, wg = geometry.group
    gr, gc = geometry.group_grid
    x = grouped.reshape(B, gr, gc, T, hg, wg, D).transpose(0, 3, 1, 4, 2, 5, 6)
    return x.reshape(B, geometry.num_tokens, D)
