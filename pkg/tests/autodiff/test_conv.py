import numpy as np
import pytest

from diffuma.autodiff import (
    Tensor,
    check_gradients,
    conv2d,
    conv_transpose2d,
    mean,
    mul,
    silu,
    sum_,
)
from diffuma.errors import DimensionError


def test_all_ones() -> None:
    out = conv2d(Tensor(np.ones((1, 1, 3, 3))), Tensor(np.ones((1, 1, 3, 3))))
    assert out.shape == (1, 1, 1, 1)
    assert out.item() == 9.0  # noqa: PLR2004


def test_impulse_response_is_the_flipped_kernel() -> None:
    image = np.zeros((1, 1, 5, 5))
    image[0, 0, 2, 2] = 1.0
    kernel = np.arange(9, dtype=np.float64).reshape(1, 1, 3, 3)
    out = conv2d(
        Tensor(image, dtype=np.float64),
        Tensor(kernel, dtype=np.float64),
    )
    np.testing.assert_array_equal(out.data[0, 0], kernel[0, 0, ::-1, ::-1])


@pytest.mark.parametrize(
    ("size", "stride", "padding", "expected"),
    [
        (8, 1, 0, 6),
        (8, 1, 1, 8),
        (8, 2, 1, 4),
        (7, 2, 1, 4),
    ],
)
def test_output_size(
    size: int,
    stride: int,
    padding: int,
    expected: int,
) -> None:
    out = conv2d(
        Tensor(np.zeros((1, 2, size, size))),
        Tensor(np.zeros((3, 2, 3, 3))),
        stride=stride,
        padding=padding,
    )
    assert out.shape == (1, 3, expected, expected)


def test_transpose_of_single_pixel() -> None:
    out = conv_transpose2d(
        Tensor(np.ones((1, 1, 1, 1))),
        Tensor(np.ones((1, 1, 2, 2))),
    )
    np.testing.assert_array_equal(out.data, np.ones((1, 1, 2, 2)))


@pytest.mark.parametrize(
    ("size", "stride", "padding"),
    [(6, 1, 0), (6, 1, 1), (7, 2, 1)],
)
def test_transpose_is_adjoint(size: int, stride: int, padding: int) -> None:
    rng = np.random.default_rng(size + stride + padding)
    x = Tensor(rng.normal(size=(2, 3, size, size)), dtype=np.float64)
    kernel = Tensor(rng.normal(size=(4, 3, 3, 3)), dtype=np.float64)
    forward = conv2d(x, kernel, stride=stride, padding=padding)
    y = Tensor(rng.normal(size=forward.shape), dtype=np.float64)
    adjoint = conv_transpose2d(y, kernel, stride, padding)
    assert adjoint.shape == x.shape
    lhs = float(np.sum(forward.data * y.data))
    rhs = float(np.sum(x.data * adjoint.data))
    assert lhs == pytest.approx(rhs, rel=1e-6)


@pytest.mark.usefixtures("float64")
def test_conv2d_gradients() -> None:
    rng = np.random.default_rng(0)
    x = Tensor(rng.normal(size=(2, 1, 8, 8)))
    kernel = Tensor(rng.normal(size=(4, 1, 3, 3)))
    weights = Tensor(rng.normal(size=(2, 4, 6, 6)))
    error = check_gradients(
        lambda: sum_(mul(conv2d(x, kernel), weights)),
        [x, kernel],
        eps=1e-4,
    )
    assert error < 1e-4  # noqa: PLR2004


@pytest.mark.usefixtures("float64")
def test_conv_transpose2d_gradients() -> None:
    rng = np.random.default_rng(1)
    x = Tensor(rng.normal(size=(2, 2, 3, 3)))
    kernel = Tensor(rng.normal(size=(2, 1, 4, 4)))
    weights = Tensor(rng.normal(size=(2, 1, 6, 6)))
    error = check_gradients(
        lambda: sum_(
            mul(conv_transpose2d(x, kernel, stride=2, padding=1), weights),
        ),
        [x, kernel],
    )
    assert error < 1e-4  # noqa: PLR2004


@pytest.mark.usefixtures("float64")
def test_composite_conv_silu_mean() -> None:
    rng = np.random.default_rng(2)
    x = Tensor(rng.normal(size=(1, 2, 6, 6)))
    kernel = Tensor(rng.normal(size=(3, 2, 3, 3)))
    error = check_gradients(
        lambda: mean(silu(conv2d(x, kernel, stride=2, padding=1))),
        [x, kernel],
    )
    assert error < 1e-4  # noqa: PLR2004


def test_channel_mismatch() -> None:
    with pytest.raises(DimensionError, match="channels"):
        conv2d(Tensor(np.ones((1, 2, 4, 4))), Tensor(np.ones((1, 3, 3, 3))))


def test_zero_extent_input() -> None:
    with pytest.raises(DimensionError, match="non-empty"):
        conv2d(Tensor(np.ones((1, 1, 0, 4))), Tensor(np.ones((1, 1, 1, 1))))


def test_kernel_larger_than_input() -> None:
    with pytest.raises(DimensionError, match="exceeds"):
        conv2d(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 3, 3))))
