from __future__ import annotations

import dataclasses

import numpy as np

from diffuma.errors import DimensionError
from diffuma.mamba.block import BiMambaBlock
from diffuma.mamba.codec import (
    SpatialDecoder,
    SpatialEncoder,
    TemporalProjection,
)
from diffuma.mamba.sequences import FrameSequence, LatentSequence
from diffuma.nn import Module


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class MambaPathConfig:
    frame_shape: tuple[int, int, int]
    t_in: int
    t_out: int
    dim: int = 64
    state: int = 16
    layers: int = 4
    kernel_size: int = 3
    enc_channels: int = 16
    residual: bool = True


@dataclasses.dataclass(frozen=True, slots=True)
class MambaOutput:
    latent: LatentSequence
    prediction: FrameSequence


class MambaPath(Module):
    """Spatial encoder, `L` bidirectional blocks and spatial decoder."""

    def __init__(
        self,
        config: MambaPathConfig,
        rng: np.random.Generator,
    ) -> None:
        self.config = config
        self.encoder = SpatialEncoder(
            config.frame_shape,
            config.enc_channels,
            config.dim,
            rng,
        )
        self.blocks = [
            BiMambaBlock(
                config.dim,
                config.state,
                config.kernel_size,
                rng,
                residual=config.residual,
            )
            for _ in range(config.layers)
        ]
        self.temporal = (
            TemporalProjection(config.t_in, config.t_out, rng)
            if config.t_in != config.t_out
            else None
        )
        self.decoder = SpatialDecoder(
            config.frame_shape,
            config.enc_channels,
            config.dim,
            rng,
        )

    def encode(self, x: FrameSequence) -> LatentSequence:
        """Returns `Z^(L)`, the output of the last block."""
        if x.frames != self.config.t_in:
            msg = f"Expected {self.config.t_in} input frames, got {x.frames}"
            raise DimensionError(msg)
        z = self.encoder(x)
        for block in self.blocks:
            z = block(z)
        return z

    def decode(self, z: LatentSequence) -> FrameSequence:
        if self.temporal is not None:
            z = self.temporal(z)
        return self.decoder(z, self.config.t_in)

    def __call__(self, x: FrameSequence) -> MambaOutput:
        latent = self.encode(x)
        return MambaOutput(latent=latent, prediction=self.decode(latent))
