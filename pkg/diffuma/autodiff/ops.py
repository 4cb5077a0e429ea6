from __future__ import annotations

import math
from collections.abc import Sequence
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import special

from diffuma.autodiff.tensor import Function, Tensor
from diffuma.errors import DimensionError


if TYPE_CHECKING:
    from diffuma._types import FloatArray, Shape


_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        msg = (
            f"{op}: operand shapes {a.shape} and {b.shape} differ;"
            " broadcast explicitly with expand()"
        )
        raise DimensionError(msg)


class _Add(Function):
    def forward(  # type: ignore[override]
        self,
        a: FloatArray,
        b: FloatArray,
    ) -> FloatArray:
        return a + b

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return grad, grad


class _Sub(Function):
    def forward(  # type: ignore[override]
        self,
        a: FloatArray,
        b: FloatArray,
    ) -> FloatArray:
        return a - b

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return grad, -grad


class _Mul(Function):
    def forward(  # type: ignore[override]
        self,
        a: FloatArray,
        b: FloatArray,
    ) -> FloatArray:
        self.a, self.b = a, b
        return a * b

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return grad * self.b, grad * self.a


class _Neg(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        return -x

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (-grad,)


class _Scale(Function):
    def __init__(self, factor: float) -> None:
        self.factor = factor

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        return x * x.dtype.type(self.factor)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (grad * grad.dtype.type(self.factor),)


class _Shift(Function):
    def __init__(self, offset: float) -> None:
        self.offset = offset

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        return x + x.dtype.type(self.offset)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (grad,)


class _Exp(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.out = np.exp(x)
        return self.out

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (grad * self.out,)


class _Square(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.x = x
        return x * x

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (grad * 2 * self.x,)


class _Abs(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.sign = np.sign(x)
        return np.abs(x)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (grad * self.sign,)


class _Sigmoid(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.out = special.expit(x)
        return self.out

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (grad * self.out * (1 - self.out),)


class _Silu(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.x = x
        self.sig = special.expit(x)
        return x * self.sig

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        sig = self.sig
        return (grad * (sig + self.x * sig * (1 - sig)),)


class _Softplus(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.x = x
        return np.logaddexp(x.dtype.type(0), x)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (grad * special.expit(self.x),)


class _Gelu(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.x = x
        self.tanh = np.tanh(_GELU_C * (x + _GELU_K * x**3))
        return 0.5 * x * (1 + self.tanh)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        x, tanh = self.x, self.tanh
        inner = _GELU_C * (1 + 3 * _GELU_K * x**2)
        local = 0.5 * (1 + tanh) + 0.5 * x * (1 - tanh**2) * inner
        return (grad * local,)


class _MatMul(Function):
    def forward(  # type: ignore[override]
        self,
        a: FloatArray,
        b: FloatArray,
    ) -> FloatArray:
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        a, b = self.a, self.b
        if b.ndim == 2:  # noqa: PLR2004
            grad_a = np.matmul(grad, b.T)
            grad_b = a.reshape(-1, a.shape[-1]).T @ grad.reshape(
                -1,
                grad.shape[-1],
            )
            return grad_a, grad_b
        grad_a = np.matmul(grad, np.swapaxes(b, -1, -2))
        grad_b = np.matmul(np.swapaxes(a, -1, -2), grad)
        return grad_a, grad_b


class _Reshape(Function):
    def __init__(self, shape: Shape) -> None:
        self.shape = shape

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.in_shape = x.shape
        return x.reshape(self.shape)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (grad.reshape(self.in_shape),)


class _Transpose(Function):
    def __init__(self, axes: tuple[int, ...]) -> None:
        self.axes = axes

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        return np.transpose(x, self.axes)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (np.transpose(grad, np.argsort(self.axes)),)


class _Expand(Function):
    def __init__(self, shape: Shape) -> None:
        self.shape = shape

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.in_shape = x.shape
        return np.broadcast_to(x, self.shape).copy()

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        lead = grad.ndim - len(self.in_shape)
        summed = grad.sum(axis=tuple(range(lead))) if lead else grad
        axes = tuple(
            axis
            for axis, (size, target) in enumerate(
                zip(self.in_shape, summed.shape, strict=True),
            )
            if size == 1 and target != 1
        )
        if axes:
            summed = summed.sum(axis=axes, keepdims=True)
        return (summed,)


class _Sum(Function):
    def __init__(
        self,
        axis: int | tuple[int, ...] | None,
        *,
        keepdims: bool,
    ) -> None:
        self.axis = axis
        self.keepdims = keepdims

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.in_shape = x.shape
        return np.asarray(x.sum(axis=self.axis, keepdims=self.keepdims))

    def _restore(self, grad: FloatArray) -> FloatArray:
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return np.broadcast_to(grad, self.in_shape)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (self._restore(grad),)


class _Mean(_Sum):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        total = super().forward(x)
        self.count = x.size // max(total.size, 1) if x.size else 1
        return total / x.dtype.type(self.count)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (self._restore(grad) / self.count,)


class _Concat(Function):
    def __init__(self, axis: int) -> None:
        self.axis = axis

    def forward(self, *arrays: FloatArray) -> FloatArray:
        self.sizes = [array.shape[self.axis] for array in arrays]
        return np.concatenate(arrays, axis=self.axis)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        bounds = np.cumsum(self.sizes)[:-1]
        return np.split(grad, bounds, axis=self.axis)


class _Stack(Function):
    def __init__(self, axis: int) -> None:
        self.axis = axis

    def forward(self, *arrays: FloatArray) -> FloatArray:
        return np.stack(arrays, axis=self.axis)

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return list(np.moveaxis(grad, self.axis, 0))


class _Slice(Function):
    def __init__(self, index: Any) -> None:
        self.index = index

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        self.in_shape, self.dtype = x.shape, x.dtype
        return np.array(x[self.index])

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        full = np.zeros(self.in_shape, dtype=self.dtype)
        np.add.at(full, self.index, grad)
        return (full,)


class _Flip(Function):
    def __init__(self, axis: int) -> None:
        self.axis = axis

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        return np.flip(x, axis=self.axis).copy()

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        return (np.flip(grad, axis=self.axis).copy(),)


class _Softmax(Function):
    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        shifted = np.exp(x - x.max(axis=-1, keepdims=True))
        self.out = shifted / shifted.sum(axis=-1, keepdims=True)
        return self.out

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        out = self.out
        dot = (grad * out).sum(axis=-1, keepdims=True)
        return (out * (grad - dot),)


class _Normalize(Function):
    def __init__(self, eps: float) -> None:
        self.eps = eps

    def forward(self, x: FloatArray) -> FloatArray:  # type: ignore[override]
        mean = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self.rstd = 1 / np.sqrt(var + x.dtype.type(self.eps))
        self.xhat = (x - mean) * self.rstd
        return self.xhat

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        xhat = self.xhat
        n = xhat.shape[-1]
        total = grad.sum(axis=-1, keepdims=True)
        proj = (grad * xhat).sum(axis=-1, keepdims=True)
        return (self.rstd / n * (n * grad - total - xhat * proj),)


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("add", a, b)
    return _Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("sub", a, b)
    return _Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("mul", a, b)
    return _Mul.apply(a, b)


def neg(x: Tensor) -> Tensor:
    return _Neg.apply(x)


def scale(x: Tensor, factor: float) -> Tensor:
    return _Scale.apply(x, factor=factor)


def shift(x: Tensor, offset: float) -> Tensor:
    return _Shift.apply(x, offset=offset)


def exp(x: Tensor) -> Tensor:
    return _Exp.apply(x)


def square(x: Tensor) -> Tensor:
    return _Square.apply(x)


def abs_(x: Tensor) -> Tensor:
    return _Abs.apply(x)


def sigmoid(x: Tensor) -> Tensor:
    return _Sigmoid.apply(x)


def silu(x: Tensor) -> Tensor:
    return _Silu.apply(x)


def softplus(x: Tensor) -> Tensor:
    return _Softplus.apply(x)


def gelu(x: Tensor) -> Tensor:
    return _Gelu.apply(x)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """`a[..., m, k] @ b[k, n]` or batched with identical leading dims."""
    if a.ndim < 2 or b.ndim < 2:  # noqa: PLR2004
        msg = f"matmul: operands need >= 2 dims, got {a.shape} and {b.shape}"
        raise DimensionError(msg)
    if a.shape[-1] != b.shape[-2]:
        msg = f"matmul: inner dimensions differ, {a.shape} @ {b.shape}"
        raise DimensionError(msg)
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:  # noqa: PLR2004
        msg = f"matmul: batch dimensions differ, {a.shape} @ {b.shape}"
        raise DimensionError(msg)
    return _MatMul.apply(a, b)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    target = tuple(shape)
    known = math.prod(size for size in target if size != -1)
    if -1 not in target and known != x.size:
        msg = f"reshape: cannot view {x.shape} as {target}"
        raise DimensionError(msg)
    if -1 in target and (known == 0 or x.size % known):
        msg = f"reshape: cannot view {x.shape} as {target}"
        raise DimensionError(msg)
    return _Reshape.apply(x, shape=target)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    if sorted(axes) != list(range(x.ndim)):
        msg = f"transpose: {tuple(axes)} is not a permutation of {x.ndim} axes"
        raise DimensionError(msg)
    return _Transpose.apply(x, axes=tuple(axes))


def expand(x: Tensor, shape: Sequence[int]) -> Tensor:
    target = tuple(shape)
    lead = len(target) - x.ndim
    compatible = lead >= 0 and all(
        size in (1, want)
        for size, want in zip(x.shape, target[lead:], strict=True)
    )
    if not compatible:
        msg = f"expand: cannot broadcast {x.shape} to {target}"
        raise DimensionError(msg)
    return _Expand.apply(x, shape=target)


def sum_(
    x: Tensor,
    axis: int | tuple[int, ...] | None = None,
    *,
    keepdims: bool = False,
) -> Tensor:
    return _Sum.apply(x, axis=axis, keepdims=keepdims)


def mean(
    x: Tensor,
    axis: int | tuple[int, ...] | None = None,
    *,
    keepdims: bool = False,
) -> Tensor:
    return _Mean.apply(x, axis=axis, keepdims=keepdims)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    first = tensors[0].shape
    axis_ = axis % len(first)
    for tensor in tensors[1:]:
        other = tensor.shape
        if len(other) != len(first) or any(
            a != b
            for i, (a, b) in enumerate(zip(first, other, strict=True))
            if i != axis_
        ):
            msg = f"concat: shapes {first} and {other} differ off axis {axis}"
            raise DimensionError(msg)
    return _Concat.apply(*tensors, axis=axis_)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    shapes = {tensor.shape for tensor in tensors}
    if len(shapes) != 1:
        msg = f"stack: tensors have different shapes {sorted(shapes)}"
        raise DimensionError(msg)
    return _Stack.apply(*tensors, axis=axis)


def slice_(x: Tensor, index: Any) -> Tensor:
    return _Slice.apply(x, index=index)


def flip(x: Tensor, axis: int) -> Tensor:
    return _Flip.apply(x, axis=axis)


def softmax(x: Tensor) -> Tensor:
    return _Softmax.apply(x)


def layer_norm(
    x: Tensor,
    weight: Tensor | None = None,
    bias: Tensor | None = None,
    eps: float = 1e-5,
) -> Tensor:
    """Normalises the last axis, then applies the optional affine."""
    out = _Normalize.apply(x, eps=eps)
    if weight is not None:
        out = mul(out, expand(weight, x.shape))
    if bias is not None:
        out = add(out, expand(bias, x.shape))
    return out
