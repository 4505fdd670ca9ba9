"""Tests for tensor primitives and gradient checking."""

import numpy as np
import pytest

from src.core.exceptions import PreconditionError, ShapeError
from src.tensor import (
    Tensor,
    concat,
    dropout,
    gelu,
    grad_check,
    layer_norm,
    mac_counter,
    matmul,
    precision,
    softmax,
    take,
)


@pytest.fixture(autouse=True)
def _float64():
    with precision("float64"):
        yield


def _weights(shape, seed=7):
    return np.random.default_rng(seed).standard_normal(shape)


def test_matmul_matches_numpy(rng):
    """Test the batched product against NumPy."""
    a = rng.standard_normal((2, 3, 4))
    b = rng.standard_normal((4, 5))
    np.testing.assert_allclose(matmul(Tensor(a), Tensor(b)).data, a @ b)


def test_matmul_inner_mismatch():
    """Test ShapeError when inner dimensions differ."""
    with pytest.raises(ShapeError, match="inner"):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))


def test_matmul_counts_macs():
    """Test that MACs are recorded as batch * m * k * n."""
    with mac_counter() as counter:
        matmul(Tensor(np.ones((2, 3, 4))), Tensor(np.ones((4, 5))))
    assert counter.total == 2 * 3 * 4 * 5


def test_matmul_gradient(rng):
    """Test matmul's backward against central differences."""
    b = Tensor(rng.standard_normal((4, 3)))
    w = _weights((2, 3))
    x = Tensor(rng.standard_normal((2, 4)))
    assert grad_check(lambda t: (matmul(t, b) * w).sum(), x, h=1e-6) < 1e-5


def test_softmax_rows_sum_to_one(rng):
    """Test softmax normalizes along the chosen axis."""
    out = softmax(Tensor(rng.standard_normal((3, 5)) * 10.0), axis=-1)
    np.testing.assert_allclose(out.data.sum(axis=-1), 1.0)


def test_softmax_large_inputs_are_finite():
    """Test the max-shift keeps softmax finite for large logits."""
    out = softmax(Tensor([1000.0, 1000.0]))
    np.testing.assert_allclose(out.data, [0.5, 0.5])


def test_softmax_bad_axis():
    """Test PreconditionError for an out-of-range axis."""
    with pytest.raises(PreconditionError):
        softmax(Tensor(np.ones((2, 2))), axis=2)


def test_softmax_gradient(rng):
    """Test softmax backward against central differences."""
    w = _weights((2, 5))
    x = Tensor(rng.standard_normal((2, 5)))
    assert grad_check(lambda t: (softmax(t) * w).sum(), x, h=1e-6) < 1e-5


def test_layer_norm_statistics(rng):
    """Test unit-gain layer norm gives zero mean and unit variance rows."""
    out = layer_norm(Tensor(rng.standard_normal((4, 16)) * 3.0 + 2.0)).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.var(axis=-1), 1.0, rtol=1e-4)


def test_layer_norm_gradients(rng):
    """Test layer norm backward for input, gain and bias."""
    width = 6
    w = _weights((3, width))
    x = Tensor(rng.standard_normal((3, width)))
    gain = Tensor(rng.standard_normal(width))
    bias = Tensor(rng.standard_normal(width))
    assert grad_check(lambda t: (layer_norm(t, gain, bias) * w).sum(), x, h=1e-6) < 1e-5
    assert grad_check(lambda g: (layer_norm(x, g, bias) * w).sum(), gain, h=1e-6) < 1e-5
    assert grad_check(lambda b: (layer_norm(x, gain, b) * w).sum(), bias, h=1e-6) < 1e-5


def test_layer_norm_gain_shape():
    """Test ShapeError when the gain does not match the trailing dimension."""
    with pytest.raises(ShapeError):
        layer_norm(Tensor(np.ones((2, 3))), Tensor(np.ones(4)))


def test_gelu_values():
    """Test GELU at a few reference points."""
    out = gelu(Tensor([0.0, 1.0, -1.0])).data
    assert out[0] == 0.0
    np.testing.assert_allclose(out[1], 0.8411919906, rtol=1e-6)
    np.testing.assert_allclose(out[2], -0.1588080094, rtol=1e-6)


def test_gelu_gradient(rng):
    """Test GELU backward against central differences."""
    x = Tensor(rng.standard_normal(8))
    assert grad_check(lambda t: (gelu(t) * _weights(8)).sum(), x, h=1e-6) < 1e-5


def test_concat_splits_gradient():
    """Test concat backward hands each input its own slice."""
    a = Tensor(np.ones((2, 1)), requires_grad=True)
    b = Tensor(np.ones((2, 3)), requires_grad=True)
    weights = np.arange(8.0).reshape(2, 4)
    (concat([a, b], axis=1) * weights).sum().backward()
    np.testing.assert_array_equal(a.grad, weights[:, :1])
    np.testing.assert_array_equal(b.grad, weights[:, 1:])


def test_concat_shape_mismatch():
    """Test ShapeError when off-axis shapes differ."""
    with pytest.raises(ShapeError):
        concat([Tensor(np.ones((2, 1))), Tensor(np.ones((3, 1)))], axis=1)


def test_take_scatter_adds():
    """Test repeated rows accumulate gradient."""
    table = Tensor(np.zeros((3, 2)), requires_grad=True)
    take(table, np.array([0, 2, 0])).sum().backward()
    np.testing.assert_array_equal(table.grad, [[2.0, 2.0], [0.0, 0.0], [1.0, 1.0]])


def test_take_out_of_range():
    """Test PreconditionError for indices beyond the table."""
    with pytest.raises(PreconditionError):
        take(Tensor(np.zeros((2, 2))), np.array([2]))


def test_dropout_identity_outside_training(rng):
    """Test dropout returns its input unchanged when not training."""
    x = Tensor(np.ones(10))
    assert dropout(x, 0.5, rng, training=False) is x
    assert dropout(x, 0.0, rng, training=True) is x


def test_dropout_preserves_expectation(rng):
    """Test inverted dropout keeps the mean near one."""
    out = dropout(Tensor(np.ones(100_000)), 0.25, rng, training=True).data
    assert set(np.unique(out)) <= {0.0, 1.0 / 0.75}
    assert abs(out.mean() - 1.0) < 0.02


def test_grad_check_rejects_bad_step():
    """Test grad_check requires a positive step."""
    with pytest.raises(PreconditionError):
        grad_check(lambda t: t.sum(), Tensor([1.0]), h=0.0)


def test_grad_check_detects_wrong_gradient():
    """Test that an op with a deliberately wrong backward is flagged."""

    def doubled_backward(t):
        out = Tensor.from_op("bad", t.data * 3.0, (t,), lambda g: (g * 2.0,))
        return out.sum()

    assert grad_check(doubled_backward, Tensor([1.0, 2.0]), h=1e-6) > 0.1
