from __future__ import annotations

import dataclasses

import numpy as np

from diffuma.autodiff import (
    Tensor,
    add,
    expand,
    get_default_dtype,
    reshape,
    transpose,
)
from diffuma.errors import ConfigError, DimensionError
from diffuma.nn import Linear, Module, parameter


_POS_STD = 0.02


def _check_divisible(height: int, width: int, patch_size: int) -> None:
    if patch_size < 1 or height % patch_size or width % patch_size:
        msg = (
            f"Patch size {patch_size} must divide the frame size"
            f" {height}x{width}"
        )
        raise ConfigError(msg)


def patchify(frames: Tensor, patch_size: int) -> Tensor:
    """`[N, C, H, W]` -> `[N, (H/p)(W/p), C p p]`, row-major over patches."""
    if frames.ndim != 4:  # noqa: PLR2004
        msg = f"patchify expects [N, C, H, W], got {frames.shape}"
        raise DimensionError(msg)
    n, c, h, w = frames.shape
    _check_divisible(h, w, patch_size)
    p = patch_size
    grid = reshape(frames, (n, c, h // p, p, w // p, p))
    grid = transpose(grid, (0, 2, 4, 1, 3, 5))
    return reshape(grid, (n, (h // p) * (w // p), c * p * p))


def unpatchify(
    tokens: Tensor,
    patch_size: int,
    frame_shape: tuple[int, int, int],
) -> Tensor:
    c, h, w = frame_shape
    _check_divisible(h, w, patch_size)
    p = patch_size
    n = tokens.shape[0]
    if tokens.shape[1:] != ((h // p) * (w // p), c * p * p):
        msg = (
            f"Tokens {tokens.shape} do not tile frames {frame_shape}"
            f" with patch size {p}"
        )
        raise DimensionError(msg)
    grid = reshape(tokens, (n, h // p, w // p, c, p, p))
    grid = transpose(grid, (0, 3, 1, 4, 2, 5))
    return reshape(grid, (n, c, h, w))


@dataclasses.dataclass(frozen=True, slots=True)
class PatchGrid:
    tokens: Tensor
    patch_size: int
    pos_embed: Tensor

    @property
    def count(self) -> int:
        return self.tokens.shape[1]


class PatchEmbed(Module):
    def __init__(
        self,
        frame_shape: tuple[int, int, int],
        patch_size: int,
        dim: int,
        rng: np.random.Generator,
    ) -> None:
        c, h, w = frame_shape
        _check_divisible(h, w, patch_size)
        count = (h // patch_size) * (w // patch_size)
        self.proj = Linear(c * patch_size * patch_size, dim, rng)
        self.pos_embed = parameter(
            rng.normal(0.0, _POS_STD, size=(count, dim)).astype(
                get_default_dtype(),
            ),
        )
        self.patch_size = patch_size

    def __call__(self, frames: Tensor) -> PatchGrid:
        tokens = self.proj(patchify(frames, self.patch_size))
        tokens = add(tokens, expand(self.pos_embed, tokens.shape))
        return PatchGrid(
            tokens=tokens,
            patch_size=self.patch_size,
            pos_embed=self.pos_embed,
        )
