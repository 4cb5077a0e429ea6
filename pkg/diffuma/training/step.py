from __future__ import annotations

import dataclasses
import logging
import math
from typing import TYPE_CHECKING

from diffuma.autodiff import Tensor, backward
from diffuma.diffusion import add_noise, fuse
from diffuma.errors import NumericalError
from diffuma.training.losses import (
    LossReport,
    diffusion_loss,
    reconstruction_loss,
    total_loss,
)
from diffuma.training.optim import AdamState, adam_step, clip_grad_norm


if TYPE_CHECKING:
    import numpy as np

    from diffuma.diffusion import NoiseSchedule
    from diffuma.mamba import FrameSequence
    from diffuma.model import Diffuma


logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class StepSettings:
    lambda_: float = 1.0
    grad_clip: float | None = 1.0


@dataclasses.dataclass(frozen=True, slots=True)
class StepLosses:
    l_diff: Tensor
    l_recon: Tensor
    l_total: Tensor


def compute_losses(
    batch: tuple[FrameSequence, FrameSequence],
    model: Diffuma,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    lambda_: float,
) -> StepLosses:
    """Forward pass of one training step.

    Draws one timestep per sample from `{1..t_diff}` and standard normal
    noise of the input's shape, in that order.
    """
    x, y = batch
    out = model.mamba(x)
    if model.disable_diffusion:
        l_diff = Tensor(0.0, dtype=x.tensor.dtype.type)
        prediction = out.prediction
    else:
        t = rng.integers(1, schedule.t_diff + 1, size=x.batch)
        noise = rng.standard_normal(x.tensor.shape).astype(x.tensor.dtype)
        x_t = add_noise(x, t, noise, schedule)
        cond = model.diffusion.conditioning(t, out.latent)
        predicted = model.diffusion.predict_noise(x_t, cond)
        target = Tensor(noise, dtype=noise.dtype.type)
        l_diff = diffusion_loss(target, predicted)
        residual = model.diffusion.detail_residual(x, out.latent, y.frames)
        prediction = fuse(out.prediction, residual)
    l_recon = reconstruction_loss(prediction.tensor, y.tensor)
    return StepLosses(
        l_diff=l_diff,
        l_recon=l_recon,
        l_total=total_loss(l_diff, l_recon, lambda_),
    )


def train_step(  # noqa: PLR0913
    batch: tuple[FrameSequence, FrameSequence],
    model: Diffuma,
    optimizer: AdamState,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    settings: StepSettings,
) -> LossReport:
    """Forward, backward, clip and one Adam update.

    Raises `NumericalError` before touching any parameter when the loss is
    not finite.
    """
    losses = compute_losses(batch, model, schedule, rng, settings.lambda_)
    report = LossReport(
        step=optimizer.step + 1,
        l_diff=losses.l_diff.item(),
        l_recon=losses.l_recon.item(),
        l_total=losses.l_total.item(),
        lambda_=settings.lambda_,
        lr=optimizer.lr,
    )
    if not math.isfinite(report.l_total):
        msg = (
            f"Non-finite loss at step {report.step}:"
            f" l_diff={report.l_diff}, l_recon={report.l_recon}"
        )
        raise NumericalError(msg, name="l_total")

    model.zero_grad()
    backward(losses.l_total)
    params = dict(model.named_parameters())
    if settings.grad_clip is not None:
        clip_grad_norm(params, settings.grad_clip)
    adam_step(params, {name: p.grad for name, p in params.items()}, optimizer)
    logger.debug(
        "step %d l_diff=%.6f l_recon=%.6f",
        report.step,
        report.l_diff,
        report.l_recon,
    )
    return report
