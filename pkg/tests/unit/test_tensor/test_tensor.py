"""Tests for the Tensor type and its graph."""

import itertools

import numpy as np
import pytest

from src.core.exceptions import GraphError, NonFiniteError, ShapeError
from src.tensor import Graph, Tensor, no_grad, precision


def test_tensor_data_is_read_only():
    """Test that wrapped arrays cannot be mutated in place."""
    t = Tensor(np.ones(3))
    with pytest.raises(ValueError):
        t.data[0] = 2.0


def test_tensor_copies_input():
    """Test that later writes to the source array do not leak into the tensor."""
    source = np.zeros(2)
    t = Tensor(source)
    source[0] = 5.0
    assert t.data[0] == 0.0


def test_default_precision_is_float32():
    """Test construction dtype follows the precision context."""
    assert Tensor([1.0, 2.0]).dtype == np.float32
    with precision("float64"):
        assert Tensor([1.0, 2.0]).dtype == np.float64
    assert Tensor([1.0]).dtype == np.float32


def test_precision_rejects_float16():
    """Test that only 32- and 64-bit floats are accepted."""
    with pytest.raises(ValueError, match="unsupported"):
        with precision("float16"):
            pass


def test_non_finite_construction_raises():
    """Test that NaN input is rejected at construction."""
    with pytest.raises(NonFiniteError):
        Tensor([1.0, np.nan])


def test_division_by_zero_raises():
    """Test that a primitive producing Inf raises NonFiniteError naming the op."""
    a = Tensor([1.0])
    with pytest.raises(NonFiniteError, match="div"):
        with np.errstate(divide="ignore"):
            a / Tensor([0.0])


def test_add_broadcast_gradient():
    """Test that broadcasting gradients are summed back to the operand shape."""
    with precision("float64"):
        a = Tensor(np.ones((3, 4)), requires_grad=True)
        b = Tensor(np.arange(4.0), requires_grad=True)
        (a + b).sum().backward()
    np.testing.assert_array_equal(a.grad, np.ones((3, 4)))
    np.testing.assert_array_equal(b.grad, np.full(4, 3.0))


def test_incompatible_shapes_raise():
    """Test ShapeError for non-broadcastable operands."""
    with pytest.raises(ShapeError):
        Tensor(np.ones(3)) + Tensor(np.ones(4))


def test_fan_out_accumulates():
    """Test that a tensor used twice receives the sum of both gradients."""
    with precision("float64"):
        x = Tensor([3.0], requires_grad=True)
        (x * x + x).sum().backward()
    np.testing.assert_allclose(x.grad, [7.0])


def test_reflected_operators_with_ndarray():
    """Test that ndarray on the left defers to the tensor."""
    with precision("float64"):
        x = Tensor([2.0], requires_grad=True)
        y = np.array([3.0]) * x
        assert isinstance(y, Tensor)
        (1.0 - y).sum().backward()
    np.testing.assert_allclose(x.grad, [-3.0])


def test_backward_needs_scalar():
    """Test that backward from a non-scalar raises GraphError."""
    x = Tensor(np.ones(2), requires_grad=True)
    with pytest.raises(GraphError, match="scalar"):
        (x * 2.0).backward()


def test_backward_on_detached_loss_raises():
    """Test that a loss with no grad-requiring input cannot backpropagate."""
    with pytest.raises(GraphError, match="detached"):
        Tensor(np.ones(2)).sum().backward()


def test_detach_stops_gradient():
    """Test that detach cuts the graph."""
    with precision("float64"):
        x = Tensor([2.0], requires_grad=True)
        y = x.detach() * x
        y.sum().backward()
    np.testing.assert_allclose(x.grad, [2.0])


def test_no_grad_records_nothing():
    """Test that operations inside no_grad build no nodes."""
    x = Tensor([1.0], requires_grad=True)
    with no_grad():
        y = x * 2.0
    assert y.node is None
    assert not y.requires_grad


def test_graph_is_topological():
    """Test that every node appears after its parents."""
    x = Tensor([1.0], requires_grad=True)
    y = x * 2.0
    z = (y + x).sum()
    graph = Graph.from_root(z)
    position = {id(t): i for i, t in enumerate(graph.order)}
    for t in graph.order:
        if t.node is not None:
            for parent in t.node.parents:
                assert position[id(parent)] < position[id(t)]
    assert graph.leaves() == [x]


def test_reshape_and_transpose_gradients():
    """Test movement ops route gradients back to the original layout."""
    with precision("float64"):
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        weights = np.arange(6.0).reshape(3, 2)
        (x.transpose(1, 0) * weights).sum().backward()
    np.testing.assert_array_equal(x.grad, weights.T)


def test_mean_gradient():
    """Test mean divides the gradient by the reduced count."""
    with precision("float64"):
        x = Tensor(np.ones((2, 5)), requires_grad=True)
        x.mean(axis=1).sum().backward()
    np.testing.assert_allclose(x.grad, np.full((2, 5), 0.2))


def test_bad_reshape_raises():
    """Test ShapeError for incompatible reshapes."""
    with pytest.raises(ShapeError):
        Tensor(np.ones(6)).reshape(4, 2)


def test_item_requires_single_value():
    """Test item() only works on single-element tensors."""
    assert Tensor([[2.5]]).item() == 2.5
    with pytest.raises(ShapeError):
        Tensor([1.0, 2.0]).item()


def _broadcast_pairs(max_rank: int = 4, sizes: tuple[int, ...] = (1, 2, 4)):
    """Every (shape, shape) pair up to ``max_rank`` that numpy can broadcast."""
    shapes = [()]
    for rank in range(1, max_rank + 1):
        shapes += list(itertools.product(sizes, repeat=rank))
    for a in shapes:
        for b in shapes:
            try:
                yield a, b, np.broadcast_shapes(a, b)
            except ValueError:
                continue


def _tiled(x: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Explicit tiling of ``x`` up to ``shape`` without relying on broadcasting."""
    x = x.reshape((1,) * (len(shape) - x.ndim) + x.shape)
    return np.tile(x, tuple(s // d for s, d in zip(shape, x.shape)))


@pytest.mark.parametrize("op", [lambda a, b: a + b, lambda a, b: a * b], ids=["add", "mul"])
def test_broadcasting_matches_explicit_tiling(op):
    """Test add/mul broadcasting against np.tile on every small shape pair up to rank 4."""
    rng = np.random.default_rng(0)
    pairs = 0
    with precision("float64"):
        for shape_a, shape_b, out_shape in _broadcast_pairs():
            a = rng.standard_normal(shape_a)
            b = rng.standard_normal(shape_b)
            result = op(Tensor(a), Tensor(b))
            expected = op(_tiled(a, out_shape), _tiled(b, out_shape))
            assert result.shape == out_shape
            np.testing.assert_array_equal(result.data, expected)
            pairs += 1
    assert pairs > 1000


def test_repeated_backward_after_zero_grad_is_bitwise_equal():
    """Test two zero-then-backward cycles give identical gradients."""
    rng = np.random.default_rng(5)
    with precision("float64"):
        x = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        w = Tensor(rng.standard_normal((4, 2)), requires_grad=True)
        bias = rng.standard_normal(2)

        def loss() -> Tensor:
            h = (x @ w + bias).tanh()
            return (h * h + x.sum(axis=1, keepdims=True)).mean()

        grads = []
        for _ in range(2):
            x.zero_grad()
            w.zero_grad()
            loss().backward()
            grads.append((x.grad.copy(), w.grad.copy()))
    np.testing.assert_array_equal(grads[0][0], grads[1][0])
    np.testing.assert_array_equal(grads[0][1], grads[1][1])
