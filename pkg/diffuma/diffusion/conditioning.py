from __future__ import annotations

import dataclasses
import math
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from diffuma.autodiff import Tensor, add, get_default_dtype, mean, silu
from diffuma.errors import ConfigError, DimensionError
from diffuma.nn import Linear, Module


if TYPE_CHECKING:
    from diffuma._types import FloatArray
    from diffuma.mamba import LatentSequence


MAX_PERIOD = 10_000


def timestep_embedding(t: npt.ArrayLike, dim: int) -> FloatArray:
    """Sinusoidal features `[sin(t f_0) .. sin(t f_k), cos(t f_0) ..]`.

    Frequencies are geometrically spaced from 1 down to `1 / MAX_PERIOD`.
    """
    if dim < 2 or dim % 2:  # noqa: PLR2004
        msg = f"Timestep embedding size must be even and >= 2, got {dim}"
        raise ConfigError(msg)
    half = dim // 2
    freqs = np.exp(-math.log(MAX_PERIOD) * np.arange(half) / half)
    args = np.asarray(t, dtype=np.float64).reshape(-1, 1) * freqs
    return np.concatenate([np.sin(args), np.cos(args)], axis=-1)


class TimestepEmbedder(Module):
    def __init__(self, dim: int, rng: np.random.Generator) -> None:
        self.dim = dim
        self.fc1 = Linear(dim, dim, rng)
        self.fc2 = Linear(dim, dim, rng)

    def __call__(self, t: npt.ArrayLike) -> Tensor:
        features = Tensor(timestep_embedding(t, self.dim))
        return self.fc2(silu(self.fc1(features)))


class ContextProjector(Module):
    """Pools `Z^(L)` over time and projects it to the condition size."""

    def __init__(
        self,
        latent_dim: int,
        dim: int,
        rng: np.random.Generator,
    ) -> None:
        self.proj = Linear(latent_dim, dim, rng)

    def __call__(self, latent: LatentSequence) -> Tensor:
        return self.proj(mean(latent.tensor, axis=1))


def make_context(
    latent: LatentSequence,
    projector: ContextProjector,
) -> Tensor:
    return projector(latent)


def zero_context(batch: int, dim: int) -> Tensor:
    return Tensor(np.zeros((batch, dim), dtype=get_default_dtype()))


@dataclasses.dataclass(frozen=True, slots=True)
class ConditioningVector:
    c_time: Tensor
    c_context: Tensor
    c: Tensor

    @classmethod
    def fuse(cls, c_time: Tensor, c_context: Tensor) -> ConditioningVector:
        if c_time.shape != c_context.shape:
            msg = (
                f"Time condition {c_time.shape} and context condition"
                f" {c_context.shape} must match"
            )
            raise DimensionError(msg)
        return cls(
            c_time=c_time,
            c_context=c_context,
            c=add(c_time, c_context),
        )

    @property
    def batch(self) -> int:
        return self.c.shape[0]
