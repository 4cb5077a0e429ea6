"""Convolutions over the tape.

All kernels use the cross-correlation convention (no kernel flip). Every
convolution is written as a loop over kernel taps, each tap being one
channel-mixing contraction over a strided window.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np

from diffuma.autodiff.tensor import Function, Tensor
from diffuma.errors import DimensionError


if TYPE_CHECKING:
    from diffuma._types import FloatArray


def _window(start: int, count: int, stride: int) -> slice:
    return slice(start, start + stride * (count - 1) + 1, stride)


def _pair(value: int | tuple[int, int], name: str) -> tuple[int, int]:
    pair = (value, value) if isinstance(value, int) else tuple(value)
    if len(pair) != 2:  # noqa: PLR2004
        msg = f"{name} must be an int or a pair, got {value!r}"
        raise DimensionError(msg)
    return pair[0], pair[1]


def _mix(x: FloatArray, weight: FloatArray) -> FloatArray:
    return np.einsum("bchw,oc->bohw", x, weight, optimize=True)


class _Conv2d(Function):
    def __init__(
        self,
        stride: tuple[int, int],
        padding: tuple[int, int],
    ) -> None:
        self.stride = stride
        self.padding = padding

    def forward(  # type: ignore[override]
        self,
        x: FloatArray,
        kernel: FloatArray,
    ) -> FloatArray:
        (sh, sw), (ph, pw) = self.stride, self.padding
        _, _, kh, kw = kernel.shape
        self.in_shape = x.shape
        self.padded = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        self.kernel = kernel
        self.out_hw = (
            (x.shape[2] + 2 * ph - kh) // sh + 1,
            (x.shape[3] + 2 * pw - kw) // sw + 1,
        )
        ho, wo = self.out_hw
        out = np.zeros(
            (x.shape[0], kernel.shape[0], ho, wo),
            dtype=np.result_type(x, kernel),
        )
        for i, j in itertools.product(range(kh), range(kw)):
            window = self.padded[:, :, _window(i, ho, sh), _window(j, wo, sw)]
            out += _mix(window, kernel[:, :, i, j])
        return out

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        (sh, sw), (ph, pw) = self.stride, self.padding
        kernel, padded = self.kernel, self.padded
        ho, wo = self.out_hw
        grad_padded = np.zeros_like(padded)
        grad_kernel = np.zeros_like(kernel)
        for i, j in itertools.product(
            range(kernel.shape[2]),
            range(kernel.shape[3]),
        ):
            index = (
                slice(None),
                slice(None),
                _window(i, ho, sh),
                _window(j, wo, sw),
            )
            grad_kernel[:, :, i, j] = np.einsum(
                "bohw,bchw->oc",
                grad,
                padded[index],
                optimize=True,
            )
            grad_padded[index] += _mix(grad, kernel[:, :, i, j].T)
        _, _, h, w = self.in_shape
        return grad_padded[:, :, ph : ph + h, pw : pw + w], grad_kernel


class _ConvTranspose2d(Function):
    def __init__(
        self,
        stride: tuple[int, int],
        padding: tuple[int, int],
    ) -> None:
        self.stride = stride
        self.padding = padding

    def forward(  # type: ignore[override]
        self,
        x: FloatArray,
        kernel: FloatArray,
    ) -> FloatArray:
        (sh, sw), (ph, pw) = self.stride, self.padding
        batch, _, h, w = x.shape
        _, c_out, kh, kw = kernel.shape
        self.x, self.kernel = x, kernel
        self.full_hw = ((h - 1) * sh + kh, (w - 1) * sw + kw)
        full = np.zeros(
            (batch, c_out, *self.full_hw),
            dtype=np.result_type(x, kernel),
        )
        for i, j in itertools.product(range(kh), range(kw)):
            full[:, :, _window(i, h, sh), _window(j, w, sw)] += _mix(
                x,
                kernel[:, :, i, j].T,
            )
        fh, fw = self.full_hw
        return full[:, :, ph : fh - ph, pw : fw - pw]

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        (sh, sw), (ph, pw) = self.stride, self.padding
        x, kernel = self.x, self.kernel
        _, _, h, w = x.shape
        fh, fw = self.full_hw
        grad_full = np.zeros(
            (grad.shape[0], grad.shape[1], fh, fw),
            dtype=grad.dtype,
        )
        grad_full[:, :, ph : fh - ph, pw : fw - pw] = grad
        grad_x = np.zeros_like(x)
        grad_kernel = np.zeros_like(kernel)
        for i, j in itertools.product(
            range(kernel.shape[2]),
            range(kernel.shape[3]),
        ):
            window = grad_full[:, :, _window(i, h, sh), _window(j, w, sw)]
            grad_x += _mix(window, kernel[:, :, i, j])
            grad_kernel[:, :, i, j] = np.einsum(
                "bchw,bohw->co",
                x,
                window,
                optimize=True,
            )
        return grad_x, grad_kernel


class _Conv1d(Function):
    def __init__(self, padding: int, groups: int) -> None:
        self.padding = padding
        self.groups = groups

    def forward(  # type: ignore[override]
        self,
        x: FloatArray,
        kernel: FloatArray,
    ) -> FloatArray:
        batch, _, length = x.shape
        c_out, c_group, width = kernel.shape
        g = self.groups
        padded = np.pad(x, ((0, 0), (0, 0), (self.padding, self.padding)))
        self.out_len = length + 2 * self.padding - width + 1
        self.in_shape = x.shape
        self.grouped = padded.reshape(batch, g, c_group, -1)
        self.kernel = kernel.reshape(g, c_out // g, c_group, width)
        out = np.zeros(
            (batch, g, c_out // g, self.out_len),
            dtype=np.result_type(x, kernel),
        )
        for j in range(width):
            out += np.einsum(
                "bgct,goc->bgot",
                self.grouped[..., j : j + self.out_len],
                self.kernel[..., j],
                optimize=True,
            )
        return out.reshape(batch, c_out, self.out_len)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        g = self.groups
        batch, channels, length = self.in_shape
        grouped, kernel = self.grouped, self.kernel
        grad = grad.reshape(batch, g, -1, self.out_len)
        grad_grouped = np.zeros_like(grouped)
        grad_kernel = np.zeros_like(kernel)
        for j in range(kernel.shape[-1]):
            window = slice(j, j + self.out_len)
            grad_grouped[..., window] += np.einsum(
                "bgot,goc->bgct",
                grad,
                kernel[..., j],
                optimize=True,
            )
            grad_kernel[..., j] = np.einsum(
                "bgot,bgct->goc",
                grad,
                grouped[..., window],
                optimize=True,
            )
        grad_x = grad_grouped.reshape(batch, channels, -1)
        p = self.padding
        return (
            grad_x[:, :, p : p + length],
            grad_kernel.reshape(-1, kernel.shape[2], kernel.shape[3]),
        )


def _check_conv_operands(
    op: str,
    x: Tensor,
    kernel: Tensor,
    in_channels_axis: int,
) -> None:
    if x.ndim != 4 or kernel.ndim != 4:  # noqa: PLR2004
        msg = (
            f"{op}: expected 4-D input and kernel,"
            f" got {x.shape} and {kernel.shape}"
        )
        raise DimensionError(msg)
    if x.shape[1] != kernel.shape[in_channels_axis]:
        msg = (
            f"{op}: input has {x.shape[1]} channels but kernel expects"
            f" {kernel.shape[in_channels_axis]}"
        )
        raise DimensionError(msg)
    if x.shape[2] == 0 or x.shape[3] == 0:
        msg = f"{op}: spatial dimensions must be non-empty, got {x.shape}"
        raise DimensionError(msg)


def conv2d(
    x: Tensor,
    kernel: Tensor,
    stride: int | tuple[int, int] = 1,
    padding: int | tuple[int, int] = 0,
) -> Tensor:
    """`x[B, C_in, H, W]` correlated with `kernel[C_out, C_in, kh, kw]`."""
    _check_conv_operands("conv2d", x, kernel, in_channels_axis=1)
    stride_, padding_ = _pair(stride, "stride"), _pair(padding, "padding")
    if min(stride_) < 1 or min(padding_) < 0:
        msg = f"conv2d: invalid stride {stride_} or padding {padding_}"
        raise DimensionError(msg)
    for axis, pad in ((2, padding_[0]), (3, padding_[1])):
        size = x.shape[axis]
        if kernel.shape[axis] > size + 2 * pad:
            msg = (
                f"conv2d: kernel extent {kernel.shape[axis]} exceeds padded"
                f" input extent {size + 2 * pad}"
            )
            raise DimensionError(msg)
    return _Conv2d.apply(x, kernel, stride=stride_, padding=padding_)


def conv_transpose2d(
    x: Tensor,
    kernel: Tensor,
    stride: int | tuple[int, int] = 1,
    padding: int | tuple[int, int] = 0,
) -> Tensor:
    """Adjoint of `conv2d`; `kernel` is laid out `[C_in, C_out, kh, kw]`."""
    _check_conv_operands("conv_transpose2d", x, kernel, in_channels_axis=0)
    stride_, padding_ = _pair(stride, "stride"), _pair(padding, "padding")
    if min(stride_) < 1 or min(padding_) < 0:
        msg = (
            f"conv_transpose2d: invalid stride {stride_}"
            f" or padding {padding_}"
        )
        raise DimensionError(msg)
    for axis, stride_i, pad in (
        (2, stride_[0], padding_[0]),
        (3, stride_[1], padding_[1]),
    ):
        out = (x.shape[axis] - 1) * stride_i - 2 * pad + kernel.shape[axis]
        if out <= 0:
            msg = (
                f"conv_transpose2d: output extent {out}"
                f" along axis {axis} is empty"
            )
            raise DimensionError(msg)
    return _ConvTranspose2d.apply(x, kernel, stride=stride_, padding=padding_)


def conv1d(
    x: Tensor,
    kernel: Tensor,
    padding: int = 0,
    groups: int = 1,
) -> Tensor:
    """`x[B, C_in, L]` with `kernel[C_out, C_in // groups, k]`, stride 1."""
    if x.ndim != 3 or kernel.ndim != 3:  # noqa: PLR2004
        msg = (
            f"conv1d: expected 3-D input and kernel,"
            f" got {x.shape} and {kernel.shape}"
        )
        raise DimensionError(msg)
    channels, c_out = x.shape[1], kernel.shape[0]
    if groups < 1 or channels % groups or c_out % groups:
        msg = (
            f"conv1d: {groups} groups do not divide"
            f" {channels} -> {c_out} channels"
        )
        raise DimensionError(msg)
    if kernel.shape[1] != channels // groups:
        msg = (
            f"conv1d: kernel expects {kernel.shape[1]} channels per group,"
            f" input provides {channels // groups}"
        )
        raise DimensionError(msg)
    if kernel.shape[2] > x.shape[2] + 2 * padding:
        msg = f"conv1d: kernel width {kernel.shape[2]} exceeds padded length"
        raise DimensionError(msg)
    return _Conv1d.apply(x, kernel, padding=padding, groups=groups)
