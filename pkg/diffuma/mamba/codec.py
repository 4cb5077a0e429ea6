from __future__ import annotations

import numpy as np

from diffuma.autodiff import add, expand, matmul, reshape, silu, transpose
from diffuma.errors import ConfigError, DimensionError
from diffuma.mamba.sequences import FrameSequence, LatentSequence, SequenceKind
from diffuma.nn import Conv2d, ConvTranspose2d, Linear, Module
from diffuma.nn.layers import uniform, zeros


DOWNSAMPLING = 4


def _grid(height: int, width: int) -> tuple[int, int]:
    if height % DOWNSAMPLING or width % DOWNSAMPLING:
        msg = (
            f"Frame height and width must be divisible by {DOWNSAMPLING}"
            f" (encoder downsampling), got {height}x{width}"
        )
        raise ConfigError(msg)
    return height // DOWNSAMPLING, width // DOWNSAMPLING


class SpatialEncoder(Module):
    """Two stride-2 convolutions per frame, then a projection to `D`."""

    def __init__(  # noqa: PLR0913
        self,
        frame_shape: tuple[int, int, int],
        channels: int,
        dim: int,
        rng: np.random.Generator,
    ) -> None:
        c, h, w = frame_shape
        grid_h, grid_w = _grid(h, w)
        self.frame_shape = frame_shape
        self.conv1 = Conv2d(c, channels, 3, rng, stride=2, padding=1)
        self.conv2 = Conv2d(
            channels,
            2 * channels,
            3,
            rng,
            stride=2,
            padding=1,
        )
        self.proj = Linear(2 * channels * grid_h * grid_w, dim, rng)

    def __call__(self, x: FrameSequence) -> LatentSequence:
        if x.frame_shape != self.frame_shape:
            _grid(*x.frame_shape[1:])
            msg = (
                f"Encoder built for frames {self.frame_shape},"
                f" got {x.frame_shape}"
            )
            raise DimensionError(msg)
        batch, steps = x.batch, x.frames
        frames = reshape(x.tensor, (batch * steps, *self.frame_shape))
        features = silu(self.conv2(silu(self.conv1(frames))))
        flat = reshape(features, (batch * steps, -1))
        latent = self.proj(flat)
        return LatentSequence(reshape(latent, (batch, steps, -1)))


class TemporalProjection(Module):
    """Learned linear map across the time axis, `T_in -> T_out`."""

    def __init__(
        self,
        t_in: int,
        t_out: int,
        rng: np.random.Generator,
    ) -> None:
        self.weight = uniform(rng, (t_in, t_out), 1 / np.sqrt(t_in))
        self.bias = zeros((t_out,))

    def __call__(self, z: LatentSequence) -> LatentSequence:
        time_last = transpose(z.tensor, (0, 2, 1))
        mapped = matmul(time_last, self.weight)
        mapped = add(mapped, expand(self.bias, mapped.shape))
        return LatentSequence(
            transpose(mapped, (0, 2, 1)),
            layer_index=z.layer_index,
        )


class SpatialDecoder(Module):
    """Mirror of the encoder with two stride-2 transposed convolutions."""

    def __init__(  # noqa: PLR0913
        self,
        frame_shape: tuple[int, int, int],
        channels: int,
        dim: int,
        rng: np.random.Generator,
    ) -> None:
        c, h, w = frame_shape
        self.grid = _grid(h, w)
        self.frame_shape = frame_shape
        self.channels = channels
        self.proj = Linear(
            dim,
            2 * channels * self.grid[0] * self.grid[1],
            rng,
        )
        self.up1 = ConvTranspose2d(
            2 * channels,
            channels,
            4,
            rng,
            stride=2,
            padding=1,
        )
        self.up2 = ConvTranspose2d(channels, c, 4, rng, stride=2, padding=1)

    def __call__(self, z: LatentSequence, t_in: int) -> FrameSequence:
        batch, steps, dim = z.tensor.shape
        flat = silu(self.proj(reshape(z.tensor, (batch * steps, dim))))
        grid = reshape(flat, (batch * steps, 2 * self.channels, *self.grid))
        frames = self.up2(silu(self.up1(grid)))
        out = reshape(frames, (batch, steps, *self.frame_shape))
        return FrameSequence(out, t_in, steps, SequenceKind.prediction)
