from __future__ import annotations

import math

import numpy as np

from diffuma.autodiff import (
    Tensor,
    add,
    conv2d,
    conv_transpose2d,
    expand,
    get_default_dtype,
    layer_norm,
    matmul,
    reshape,
)
from diffuma.nn.module import Module, parameter


def uniform(
    rng: np.random.Generator,
    shape: tuple[int, ...],
    bound: float,
) -> Tensor:
    data = rng.uniform(-bound, bound, size=shape)
    return parameter(data.astype(get_default_dtype()))


def zeros(shape: tuple[int, ...]) -> Tensor:
    return parameter(np.zeros(shape, dtype=get_default_dtype()))


def _add_channel_bias(x: Tensor, bias: Tensor) -> Tensor:
    shaped = reshape(bias, (1, bias.shape[0], 1, 1))
    return add(x, expand(shaped, x.shape))


class Linear(Module):
    """`y = x @ weight + bias` over the last axis."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        *,
        bias: bool = True,
        zero_init: bool = False,
    ) -> None:
        shape = (in_features, out_features)
        bound = 1 / math.sqrt(in_features)
        self.weight = zeros(shape) if zero_init else uniform(rng, shape, bound)
        self.bias = zeros((out_features,)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim == 1:
            x = reshape(x, (1, x.shape[0]))
        y = matmul(x, self.weight)
        if self.bias is None:
            return y
        return add(y, expand(self.bias, y.shape))


class Conv2d(Module):
    def __init__(  # noqa: PLR0913
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        *,
        stride: int = 1,
        padding: int = 0,
    ) -> None:
        fan_in = in_channels * kernel_size * kernel_size
        self.kernel = uniform(
            rng,
            (out_channels, in_channels, kernel_size, kernel_size),
            1 / math.sqrt(fan_in),
        )
        self.bias = zeros((out_channels,))
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        out = conv2d(x, self.kernel, stride=self.stride, padding=self.padding)
        return _add_channel_bias(out, self.bias)


class ConvTranspose2d(Module):
    def __init__(  # noqa: PLR0913
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        *,
        stride: int = 1,
        padding: int = 0,
    ) -> None:
        fan_in = in_channels * kernel_size * kernel_size
        self.kernel = uniform(
            rng,
            (in_channels, out_channels, kernel_size, kernel_size),
            1 / math.sqrt(fan_in),
        )
        self.bias = zeros((out_channels,))
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        out = conv_transpose2d(
            x,
            self.kernel,
            stride=self.stride,
            padding=self.padding,
        )
        return _add_channel_bias(out, self.bias)


class LayerNorm(Module):
    def __init__(
        self,
        dim: int,
        *,
        affine: bool = True,
        eps: float = 1e-5,
    ) -> None:
        dtype = get_default_dtype()
        self.weight = parameter(np.ones(dim, dtype=dtype)) if affine else None
        self.bias = parameter(np.zeros(dim, dtype=dtype)) if affine else None
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.weight, self.bias, eps=self.eps)
