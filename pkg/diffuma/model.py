from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np

from diffuma.autodiff import Tensor, no_grad
from diffuma.diffusion import DiffusionPath, DiffusionPathConfig, fuse
from diffuma.mamba import (
    FrameSequence,
    LatentSequence,
    MambaPath,
    MambaPathConfig,
)
from diffuma.mamba.sequences import FRAME_RANGE
from diffuma.nn import Module


if TYPE_CHECKING:
    from diffuma._types import FloatArray
    from diffuma.config import ModelSection, RunConfig


@dataclasses.dataclass(frozen=True, slots=True)
class Prediction:
    fused: FrameSequence
    mamba: FrameSequence
    latent: LatentSequence
    residual: Tensor | None = None


class Diffuma(Module):
    """Mamba prediction plus the diffusion path's detail residual.

    The diffusion path is always built so checkpoints keep one layout;
    `disable_diffusion` only skips it at run time.
    """

    def __init__(  # noqa: PLR0913
        self,
        config: ModelSection,
        t_in: int,
        t_out: int,
        rng: np.random.Generator,
        *,
        disable_diffusion: bool = False,
        zero_context: bool = False,
    ) -> None:
        self.mamba = MambaPath(
            MambaPathConfig(
                frame_shape=config.frame_shape,
                t_in=t_in,
                t_out=t_out,
                dim=config.dim,
                state=config.state,
                layers=config.layers,
                kernel_size=config.k_t,
                enc_channels=config.enc_channels,
                residual=config.residual,
            ),
            rng,
        )
        self.diffusion = DiffusionPath(
            DiffusionPathConfig(
                frame_shape=config.frame_shape,
                latent_dim=config.dim,
                cond_dim=config.d_c,
                dim=config.dit_dim,
                n_heads=config.n_heads,
                n_blocks=config.n_dit_blocks,
                mlp_ratio=config.mlp_ratio,
                patch_size=config.patch_size,
            ),
            rng,
            zero_context=zero_context,
        )
        self.t_in = t_in
        self.t_out = t_out
        self.disable_diffusion = disable_diffusion

    @property
    def zero_context(self) -> bool:
        return self.diffusion.zero_context

    @zero_context.setter
    def zero_context(self, value: bool) -> None:
        self.diffusion.zero_context = value

    def __call__(self, x: FrameSequence) -> Prediction:
        out = self.mamba(x)
        if self.disable_diffusion:
            return Prediction(
                fused=out.prediction,
                mamba=out.prediction,
                latent=out.latent,
            )
        residual = self.diffusion.detail_residual(x, out.latent, self.t_out)
        return Prediction(
            fused=fuse(out.prediction, residual),
            mamba=out.prediction,
            latent=out.latent,
            residual=residual,
        )

    def predict(self, x: FrameSequence) -> Prediction:
        with no_grad():
            return self(x)

    def predict_all(
        self,
        x: FrameSequence,
        batch_size: int,
    ) -> tuple[FloatArray, FloatArray]:
        """Fused predictions and detail residuals for every sample.

        Fused frames are clipped to the `[0, 1]` frame range; residuals are
        returned as computed and are all zeros when the diffusion path is
        disabled.
        """
        fused: list[FloatArray] = []
        residuals: list[FloatArray] = []
        for start in range(0, x.batch, batch_size):
            data = x.tensor.data[start : start + batch_size]
            chunk = FrameSequence(
                Tensor(data, dtype=data.dtype.type),
                x.t_in,
                x.t_out,
                x.kind,
            )
            out = self.predict(chunk)
            fused.append(np.clip(out.fused.tensor.data, *FRAME_RANGE))
            residuals.append(
                np.zeros_like(out.fused.tensor.data)
                if out.residual is None
                else out.residual.data,
            )
        return np.concatenate(fused), np.concatenate(residuals)


def rng_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for parameter init and for training draws."""
    init, train = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init), np.random.default_rng(train)


def build_model(
    config: RunConfig,
    *,
    disable_diffusion: bool | None = None,
    zero_context: bool = False,
) -> Diffuma:
    init_rng, _ = rng_streams(config.train.seed)
    return Diffuma(
        config.model,
        config.data.t_in,
        config.data.t_out,
        init_rng,
        disable_diffusion=(
            config.train.disable_diffusion
            if disable_diffusion is None
            else disable_diffusion
        ),
        zero_context=zero_context,
    )
