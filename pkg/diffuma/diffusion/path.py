from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from diffuma.autodiff import Tensor, add, expand, reshape, slice_
from diffuma.diffusion.conditioning import (
    ConditioningVector,
    ContextProjector,
    TimestepEmbedder,
    make_context,
    zero_context,
)
from diffuma.diffusion.dit import DitBlock, FinalLayer
from diffuma.diffusion.patches import PatchEmbed, unpatchify
from diffuma.errors import DimensionError
from diffuma.mamba import FrameSequence, SequenceKind
from diffuma.nn import Module


if TYPE_CHECKING:
    from diffuma.mamba import LatentSequence


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class DiffusionPathConfig:
    frame_shape: tuple[int, int, int]
    latent_dim: int
    cond_dim: int = 64
    dim: int = 64
    n_heads: int = 4
    n_blocks: int = 4
    mlp_ratio: float = 4.0
    patch_size: int = 4


class DiffusionPath(Module):
    """Noise predictor conditioned on the timestep and the Mamba latent."""

    def __init__(
        self,
        config: DiffusionPathConfig,
        rng: np.random.Generator,
        *,
        zero_context: bool = False,
    ) -> None:
        self.config = config
        c, _, _ = config.frame_shape
        self.time_embedder = TimestepEmbedder(config.cond_dim, rng)
        self.context = ContextProjector(
            config.latent_dim,
            config.cond_dim,
            rng,
        )
        self.patch_embed = PatchEmbed(
            config.frame_shape,
            config.patch_size,
            config.dim,
            rng,
        )
        self.blocks = [
            DitBlock(
                config.dim,
                config.cond_dim,
                config.n_heads,
                config.mlp_ratio,
                rng,
            )
            for _ in range(config.n_blocks)
        ]
        self.final = FinalLayer(
            config.dim,
            config.cond_dim,
            c * config.patch_size**2,
            rng,
        )
        self.zero_context = zero_context

    def conditioning(
        self,
        t: npt.ArrayLike,
        latent: LatentSequence,
    ) -> ConditioningVector:
        batch = latent.tensor.shape[0]
        steps = np.broadcast_to(np.asarray(t, dtype=np.int64), (batch,))
        c_time = self.time_embedder(steps)
        c_context = (
            zero_context(batch, self.config.cond_dim)
            if self.zero_context
            else make_context(latent, self.context)
        )
        return ConditioningVector.fuse(c_time, c_context)

    def predict_noise(self, x_t: Tensor, cond: ConditioningVector) -> Tensor:
        """`[B, T, C, H, W]` noised frames -> predicted noise, same shape.

        Frames are tokenised independently; the condition is shared by all
        frames of a sample.
        """
        frame_shape = self.config.frame_shape
        if x_t.ndim != 5 or x_t.shape[2:] != frame_shape:  # noqa: PLR2004
            msg = (
                f"Expected frames [B, T, {frame_shape}],"
                f" got {x_t.shape}"
            )
            raise DimensionError(msg)
        batch, steps = x_t.shape[:2]
        if cond.batch != batch:
            msg = f"Condition batch {cond.batch} differs from frames {batch}"
            raise DimensionError(msg)
        frames = reshape(x_t, (batch * steps, *frame_shape))
        cond_dim = self.config.cond_dim
        shared = reshape(cond.c, (batch, 1, cond_dim))
        c = reshape(
            expand(shared, (batch, steps, cond_dim)),
            (batch * steps, cond_dim),
        )
        tokens = self.patch_embed(frames).tokens
        for block in self.blocks:
            tokens = block(tokens, c)
        patches = self.final(tokens, c)
        out = unpatchify(patches, self.config.patch_size, frame_shape)
        return reshape(out, x_t.shape)

    def detail_residual(
        self,
        x_ref: FrameSequence,
        latent: LatentSequence,
        t_out: int,
    ) -> Tensor:
        """The noise-free pass at `t = 0`, cut to the last `t_out` frames."""
        if x_ref.frames < t_out:
            msg = (
                f"Cannot fuse a {x_ref.frames}-frame residual into a"
                f" {t_out}-frame prediction"
            )
            raise DimensionError(msg)
        cond = self.conditioning(0, latent)
        residual = self.predict_noise(x_ref.tensor, cond)
        if x_ref.frames == t_out:
            return residual
        keep = slice(x_ref.frames - t_out, None)
        return slice_(residual, (slice(None), keep))

    def enhance_and_fuse(
        self,
        x_ref: FrameSequence,
        y_mamba: FrameSequence,
        latent: LatentSequence,
    ) -> FrameSequence:
        residual = self.detail_residual(x_ref, latent, y_mamba.frames)
        return fuse(y_mamba, residual)


def fuse(y_mamba: FrameSequence, residual: Tensor) -> FrameSequence:
    if residual.shape != y_mamba.tensor.shape:
        msg = (
            f"Residual {residual.shape} does not match the prediction"
            f" {y_mamba.tensor.shape}"
        )
        raise DimensionError(msg)
    return FrameSequence(
        add(y_mamba.tensor, residual),
        y_mamba.t_in,
        y_mamba.t_out,
        SequenceKind.prediction,
    )
