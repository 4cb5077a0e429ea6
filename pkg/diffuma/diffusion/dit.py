"""Transformer blocks with adaptive layer norm conditioning.

Every block computes

    x = x + gate_1 * attn(modulate(norm(x), shift_1, scale_1))
    x = x + gate_2 * mlp(modulate(norm(x), shift_2, scale_2))

where the six modulation vectors are a linear function of `silu(c)`.
The gate columns of that linear map start at zero, so a fresh block is the
identity on its tokens.
"""

from __future__ import annotations

import math

import numpy as np

from diffuma.autodiff import (
    Tensor,
    add,
    expand,
    gelu,
    matmul,
    mul,
    reshape,
    scale,
    shift,
    silu,
    slice_,
    softmax,
    transpose,
)
from diffuma.errors import ConfigError, DimensionError
from diffuma.nn import LayerNorm, Linear, Module


_NORM_EPS = 1e-6


def _per_token(vector: Tensor, like: Tensor) -> Tensor:
    """`[N, D]` -> `[N, P, D]` matching `like`."""
    n, dim = vector.shape
    return expand(reshape(vector, (n, 1, dim)), like.shape)


def modulate(x: Tensor, offset: Tensor, gain: Tensor) -> Tensor:
    """`x * (1 + gain) + offset` with per-sample `gain` and `offset`."""
    scaled = mul(x, _per_token(shift(gain, 1.0), x))
    return add(scaled, _per_token(offset, x))


def _chunks(x: Tensor, count: int) -> list[Tensor]:
    width = x.shape[-1] // count
    return [
        slice_(x, (Ellipsis, slice(i * width, (i + 1) * width)))
        for i in range(count)
    ]


class Attention(Module):
    def __init__(
        self,
        dim: int,
        n_heads: int,
        rng: np.random.Generator,
    ) -> None:
        if n_heads < 1 or dim % n_heads:
            msg = f"n_heads={n_heads} must divide the token size {dim}"
            raise ConfigError(msg)
        self.qkv = Linear(dim, 3 * dim, rng)
        self.out = Linear(dim, dim, rng)
        self.n_heads = n_heads
        self.head_dim = dim // n_heads

    def __call__(self, x: Tensor) -> Tensor:
        n, tokens, dim = x.shape
        qkv = reshape(self.qkv(x), (n, tokens, 3, self.n_heads, self.head_dim))
        qkv = transpose(qkv, (2, 0, 3, 1, 4))
        q, k, v = (slice_(qkv, i) for i in range(3))
        scores = matmul(q, transpose(k, (0, 1, 3, 2)))
        weights = softmax(scale(scores, 1 / math.sqrt(self.head_dim)))
        heads = transpose(matmul(weights, v), (0, 2, 1, 3))
        return self.out(reshape(heads, (n, tokens, dim)))


class Mlp(Module):
    def __init__(
        self,
        dim: int,
        hidden: int,
        rng: np.random.Generator,
    ) -> None:
        self.fc1 = Linear(dim, hidden, rng)
        self.fc2 = Linear(hidden, dim, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(gelu(self.fc1(x)))


class DitBlock(Module):
    def __init__(  # noqa: PLR0913
        self,
        dim: int,
        cond_dim: int,
        n_heads: int,
        mlp_ratio: float,
        rng: np.random.Generator,
    ) -> None:
        self.norm1 = LayerNorm(dim, affine=False, eps=_NORM_EPS)
        self.attn = Attention(dim, n_heads, rng)
        self.norm2 = LayerNorm(dim, affine=False, eps=_NORM_EPS)
        self.mlp = Mlp(dim, int(dim * mlp_ratio), rng)
        self.adaln = Linear(cond_dim, 6 * dim, rng)
        for gate in (2, 5):
            self.adaln.weight.data[:, gate * dim : (gate + 1) * dim] = 0
        self.dim = dim

    def __call__(self, x: Tensor, c: Tensor) -> Tensor:
        if x.ndim != 3 or x.shape[-1] != self.dim:  # noqa: PLR2004
            msg = f"DiT block expects [N, P, {self.dim}] tokens, got {x.shape}"
            raise DimensionError(msg)
        (
            shift_attn,
            scale_attn,
            gate_attn,
            shift_mlp,
            scale_mlp,
            gate_mlp,
        ) = _chunks(self.adaln(silu(c)), 6)
        h = self.attn(modulate(self.norm1(x), shift_attn, scale_attn))
        x = add(x, mul(_per_token(gate_attn, h), h))
        h = self.mlp(modulate(self.norm2(x), shift_mlp, scale_mlp))
        return add(x, mul(_per_token(gate_mlp, h), h))


class FinalLayer(Module):
    """Modulated norm and a zero-initialised head back to patch pixels."""

    def __init__(
        self,
        dim: int,
        cond_dim: int,
        patch_pixels: int,
        rng: np.random.Generator,
    ) -> None:
        self.norm = LayerNorm(dim, affine=False, eps=_NORM_EPS)
        self.adaln = Linear(cond_dim, 2 * dim, rng)
        self.head = Linear(dim, patch_pixels, rng, zero_init=True)

    def __call__(self, x: Tensor, c: Tensor) -> Tensor:
        offset, gain = _chunks(self.adaln(silu(c)), 2)
        return self.head(modulate(self.norm(x), offset, gain))
