"""Dense tensor engine with reverse-mode differentiation."""

from src.tensor.context import mac_counter, no_grad, precision, serial_mode
from src.tensor.gradcheck import grad_check
from src.tensor.ops import (
    concat,
    constant,
    dropout,
    ewise,
    gelu,
    layer_norm,
    matmul,
    softmax,
    take,
)
from src.tensor.tensor import Graph, Node, Tensor

__all__ = [
    "Graph",
    "Node",
    "Tensor",
    "concat",
    "constant",
    "dropout",
    "ewise",
    "gelu",
    "grad_check",
    "layer_norm",
    "mac_counter",
    "matmul",
    "no_grad",
    "precision",
    "serial_mode",
    "softmax",
    "take",
]
