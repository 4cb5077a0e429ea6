from collections.abc import Callable

import numpy as np
import pytest

from diffuma.autodiff import (
    Tensor,
    abs_,
    add,
    backward,
    check_gradients,
    concat,
    conv1d,
    exp,
    expand,
    flip,
    gelu,
    layer_norm,
    matmul,
    mean,
    mul,
    neg,
    reshape,
    scale,
    shift,
    sigmoid,
    silu,
    slice_,
    softmax,
    softplus,
    square,
    stack,
    sub,
    sum_,
    transpose,
)
from diffuma.errors import DimensionError


_ELEMENTARY_TOLERANCE = 1e-4

_Case = Callable[[list[Tensor]], Tensor]


def _weighted(out: Tensor) -> Tensor:
    """Scalar projection with fixed weights so every output entry matters."""
    weights = np.random.default_rng(out.size).normal(size=out.shape)
    return sum_(mul(out, Tensor(weights, dtype=out.dtype.type)))


_CASES: dict[str, tuple[list[tuple[int, ...]], _Case]] = {
    "add": ([(2, 3), (2, 3)], lambda t: add(t[0], t[1])),
    "sub": ([(2, 3), (2, 3)], lambda t: sub(t[0], t[1])),
    "mul": ([(2, 3), (2, 3)], lambda t: mul(t[0], t[1])),
    "neg": ([(4,)], lambda t: neg(t[0])),
    "scale": ([(4,)], lambda t: scale(t[0], -1.7)),
    "shift": ([(4,)], lambda t: shift(t[0], 0.3)),
    "exp": ([(2, 3)], lambda t: exp(t[0])),
    "square": ([(2, 3)], lambda t: square(t[0])),
    "sigmoid": ([(2, 3)], lambda t: sigmoid(t[0])),
    "silu": ([(2, 3)], lambda t: silu(t[0])),
    "softplus": ([(2, 3)], lambda t: softplus(t[0])),
    "gelu": ([(2, 3)], lambda t: gelu(t[0])),
    "matmul": ([(3, 4), (4, 2)], lambda t: matmul(t[0], t[1])),
    "matmul-batched": (
        [(2, 3, 4), (2, 4, 2)],
        lambda t: matmul(t[0], t[1]),
    ),
    "reshape": ([(2, 6)], lambda t: reshape(t[0], (3, -1))),
    "transpose": ([(2, 3, 4)], lambda t: transpose(t[0], (2, 0, 1))),
    "expand": ([(1, 3)], lambda t: expand(t[0], (4, 3))),
    "expand-lead": ([(3,)], lambda t: expand(t[0], (2, 4, 3))),
    "sum": ([(2, 3)], lambda t: sum_(t[0], axis=1, keepdims=True)),
    "mean": ([(2, 3, 4)], lambda t: mean(t[0], axis=(0, 2))),
    "concat": ([(2, 3), (2, 1)], lambda t: concat([t[0], t[1]], axis=1)),
    "stack": ([(2, 3), (2, 3)], lambda t: stack([t[0], t[1]], axis=1)),
    "slice": ([(4, 5)], lambda t: slice_(t[0], (slice(1, 3), Ellipsis))),
    "slice-repeated": ([(4, 5)], lambda t: slice_(t[0], ([0, 2, 0],))),
    "flip": ([(3, 4)], lambda t: flip(t[0], 1)),
    "softmax": ([(2, 5)], lambda t: softmax(t[0])),
    "layer_norm": (
        [(3, 6), (6,), (6,)],
        lambda t: layer_norm(t[0], t[1], t[2]),
    ),
    "conv1d-depthwise": (
        [(2, 3, 7), (3, 1, 3)],
        lambda t: conv1d(t[0], t[1], padding=1, groups=3),
    ),
    "conv1d": ([(1, 2, 5), (3, 2, 3)], lambda t: conv1d(t[0], t[1])),
}


@pytest.mark.usefixtures("float64")
@pytest.mark.parametrize("name", list(_CASES))
def test_gradients_match_finite_differences(name: str) -> None:
    shapes, op = _CASES[name]
    rng = np.random.default_rng(0)
    inputs = [Tensor(rng.normal(size=shape)) for shape in shapes]
    error = check_gradients(lambda: _weighted(op(inputs)), inputs, eps=1e-4)
    assert error < _ELEMENTARY_TOLERANCE


@pytest.mark.usefixtures("float64")
def test_abs_gradient_away_from_zero() -> None:
    rng = np.random.default_rng(1)
    values = rng.uniform(0.5, 2.0, size=(3, 3)) * rng.choice([-1, 1], (3, 3))
    x = Tensor(values)
    error = check_gradients(lambda: _weighted(abs_(x)), [x])
    assert error < _ELEMENTARY_TOLERANCE


def test_slice_gradient_accumulates_repeated_indices() -> None:
    x = Tensor(np.zeros(3), requires_grad=True)
    backward(sum_(slice_(x, ([0, 0, 2, 0],))))
    assert x.grad is not None
    np.testing.assert_array_equal(x.grad, [3, 0, 1])


def test_silu_at_zero() -> None:
    assert silu(Tensor(0.0)).item() == 0.0


def test_softmax_of_equal_logits() -> None:
    out = softmax(Tensor([0.0, 0.0, 0.0], dtype=np.float64))
    np.testing.assert_allclose(out.data, [1 / 3, 1 / 3, 1 / 3], rtol=1e-12)


def test_softmax_is_shift_invariant() -> None:
    logits = np.array([[1000.0, 1001.0, 1002.0]])
    out = softmax(Tensor(logits, dtype=np.float64))
    expected = softmax(Tensor(logits - 1000.0, dtype=np.float64))
    np.testing.assert_allclose(out.data, expected.data, rtol=1e-12)


@pytest.mark.parametrize(
    ("op", "shapes"),
    [
        (add, [(2, 3), (3, 2)]),
        (sub, [(2,), (2, 1)]),
        (mul, [(1, 3), (2, 3)]),
        (matmul, [(2, 3), (2, 3)]),
    ],
)
def test_shape_mismatch(
    op: Callable[[Tensor, Tensor], Tensor],
    shapes: list[tuple[int, ...]],
) -> None:
    a, b = (Tensor(np.ones(shape)) for shape in shapes)
    with pytest.raises(DimensionError):
        op(a, b)


def test_expand_rejects_incompatible_shape() -> None:
    with pytest.raises(DimensionError, match="broadcast"):
        expand(Tensor(np.ones((2, 3))), (4, 3))


def test_reshape_rejects_wrong_size() -> None:
    with pytest.raises(DimensionError):
        reshape(Tensor(np.ones(6)), (4, 2))


def test_transpose_needs_permutation() -> None:
    with pytest.raises(DimensionError):
        transpose(Tensor(np.ones((2, 3))), (0, 0))


def test_layer_norm_normalises_last_axis() -> None:
    rng = np.random.default_rng(0)
    x = Tensor(rng.normal(3.0, 2.0, size=(4, 16)), dtype=np.float64)
    out = layer_norm(x, eps=0.0).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.std(axis=-1), 1.0, rtol=1e-9)
