"""Selective state-space scan.

`h_t = A_bar_t * h_{t-1} + B_bar_t * z_t` and `o_t = sum_n C_t[n] h_t[:, n]`
with a diagonal `A = -exp(a_log)`, exact exponential discretisation for
`A_bar` and the Euler rule for `B_bar`.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np

from diffuma.autodiff import (
    Function,
    Tensor,
    conv1d,
    exp,
    expand,
    flip,
    mul,
    neg,
    reshape,
    silu,
    softplus,
    transpose,
)
from diffuma.errors import DimensionError, NumericalError
from diffuma.mamba.sequences import LatentSequence
from diffuma.nn import Linear, Module, parameter
from diffuma.nn.layers import uniform


if TYPE_CHECKING:
    from diffuma._types import FloatArray


_A_RANGE = (0.5, 8.0)
_DELTA_RANGE = (1e-3, 1e-1)


class Direction(enum.Enum):
    forward = enum.auto()
    backward = enum.auto()


def discretize(
    a_log: Tensor,
    delta: Tensor,
    b: Tensor,
) -> tuple[Tensor, Tensor]:
    """`a_log[D, N]`, `delta[..., D]`, `b[..., N]` -> `(A_bar, B_bar)`.

    Both outputs are `[..., D, N]`.
    """
    if np.any(delta.data <= 0):
        msg = "Step sizes must be positive; delta comes from softplus"
        raise NumericalError(msg, name="delta")
    dim, state = a_log.shape
    lead = delta.shape[:-1]
    if delta.shape[-1] != dim or b.shape != (*lead, state):
        msg = (
            f"discretize: a_log {a_log.shape} is incompatible with"
            f" delta {delta.shape} and b {b.shape}"
        )
        raise DimensionError(msg)
    full = (*lead, dim, state)
    a = expand(neg(exp(a_log)), full)
    step = expand(reshape(delta, (*lead, dim, 1)), full)
    a_bar = exp(mul(step, a))
    b_bar = mul(step, expand(reshape(b, (*lead, 1, state)), full))
    return a_bar, b_bar


class _Recurrence(Function):
    def forward(  # type: ignore[override]
        self,
        a_bar: FloatArray,
        b_bar: FloatArray,
        c: FloatArray,
        z: FloatArray,
    ) -> FloatArray:
        batch, steps, dim, state = a_bar.shape
        dtype = np.result_type(a_bar, b_bar, c, z)
        h = np.zeros((batch, dim, state), dtype=dtype)
        self.states = np.empty((batch, steps, dim, state), dtype=dtype)
        out = np.empty((batch, steps, dim), dtype=dtype)
        for t in range(steps):
            h = a_bar[:, t] * h + b_bar[:, t] * z[:, t, :, None]
            self.states[:, t] = h
            out[:, t] = np.einsum("bdn,bn->bd", h, c[:, t])
        self.a_bar, self.b_bar, self.c, self.z = a_bar, b_bar, c, z
        return out

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        a_bar, b_bar, c, z, states = (
            self.a_bar,
            self.b_bar,
            self.c,
            self.z,
            self.states,
        )
        grad_a = np.zeros_like(a_bar)
        grad_b = np.zeros_like(b_bar)
        grad_c = np.zeros_like(c)
        grad_z = np.zeros_like(z)
        grad_h = np.zeros_like(states[:, 0])
        for t in reversed(range(a_bar.shape[1])):
            grad_h = grad_h + grad[:, t, :, None] * c[:, t, None, :]
            grad_c[:, t] = np.einsum("bd,bdn->bn", grad[:, t], states[:, t])
            if t > 0:
                grad_a[:, t] = grad_h * states[:, t - 1]
            grad_b[:, t] = grad_h * z[:, t, :, None]
            grad_z[:, t] = (grad_h * b_bar[:, t]).sum(axis=-1)
            grad_h = grad_h * a_bar[:, t]
        return grad_a, grad_b, grad_c, grad_z


def scan_recurrence(  # noqa: PLR0913
    a_bar: Tensor,
    b_bar: Tensor,
    c: Tensor,
    z: Tensor,
    direction: Direction = Direction.forward,
) -> Tensor:
    """Runs the linear recurrence with `h_0 = 0`.

    Shapes: `a_bar`, `b_bar` `[B, T, D, N]`; `c` `[B, T, N]`; `z` `[B, T, D]`.
    The backward direction is the forward scan of the time-reversed inputs,
    reversed again.
    """
    batch, steps, dim, state = a_bar.shape
    if (
        b_bar.shape != a_bar.shape
        or c.shape != (batch, steps, state)
        or z.shape != (batch, steps, dim)
    ):
        msg = (
            f"scan: incompatible shapes a_bar={a_bar.shape}"
            f" b_bar={b_bar.shape} c={c.shape} z={z.shape}"
        )
        raise DimensionError(msg)
    if direction is Direction.forward:
        return _Recurrence.apply(a_bar, b_bar, c, z)
    reversed_out = _Recurrence.apply(
        flip(a_bar, 1),
        flip(b_bar, 1),
        flip(c, 1),
        flip(z, 1),
    )
    return flip(reversed_out, 1)


def _inverse_softplus(values: FloatArray) -> FloatArray:
    return values + np.log(-np.expm1(-values))


class SsmBranch(Module):
    """Parameters of one scan direction of a bidirectional block."""

    def __init__(
        self,
        dim: int,
        state: int,
        kernel_size: int,
        rng: np.random.Generator,
    ) -> None:
        if kernel_size % 2 == 0:
            msg = f"Temporal kernel size must be odd, got {kernel_size}"
            raise DimensionError(msg)
        self.conv_kernel = uniform(
            rng,
            (dim, 1, kernel_size),
            1 / math.sqrt(kernel_size),
        )
        a = rng.uniform(*_A_RANGE, size=(dim, state))
        self.a_log = parameter(np.log(a).astype(self.conv_kernel.dtype))
        self.delta_proj = Linear(dim, dim, rng)
        low, high = np.log(_DELTA_RANGE)
        step = np.exp(rng.uniform(low, high, size=dim))
        self.delta_proj.bias = parameter(
            _inverse_softplus(step).astype(self.conv_kernel.dtype),
        )
        self.b_proj = Linear(dim, state, rng, bias=False)
        self.c_proj = Linear(dim, state, rng, bias=False)
        self.kernel_size = kernel_size

    def __call__(self, x: Tensor, direction: Direction) -> Tensor:
        channels_first = transpose(x, (0, 2, 1))
        mixed = conv1d(
            channels_first,
            self.conv_kernel,
            padding=self.kernel_size // 2,
            groups=x.shape[2],
        )
        u = silu(transpose(mixed, (0, 2, 1)))
        return selective_scan(LatentSequence(u), self, direction).tensor


def selective_scan(
    z: LatentSequence,
    params: SsmBranch,
    direction: Direction,
) -> LatentSequence:
    """Selects `delta_t`, `B_t`, `C_t` from `z_t`, then scans."""
    x = z.tensor
    if z.steps == 0:
        return z
    delta = softplus(params.delta_proj(x))
    b = params.b_proj(x)
    c = params.c_proj(x)
    a_bar, b_bar = discretize(params.a_log, delta, b)
    out = scan_recurrence(a_bar, b_bar, c, x, direction)
    return LatentSequence(out, layer_index=z.layer_index)
