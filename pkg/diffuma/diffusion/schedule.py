from __future__ import annotations

import dataclasses
import logging
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from diffuma.autodiff import Tensor
from diffuma.errors import ConfigError, DimensionError


if TYPE_CHECKING:
    from diffuma._types import FloatArray, IntArray
    from diffuma.mamba import FrameSequence


logger = logging.getLogger(__name__)

TERMINAL_SIGNAL = 0.05


@dataclasses.dataclass(frozen=True, slots=True)
class NoiseSchedule:
    """Linear variance schedule of the forward noising process.

    Arrays are indexed from step 1, so `betas[t - 1]` is the variance of step
    `t`. Step 0 means "no noise" and has `alpha_bar == 1`.
    """

    t_diff: int
    betas: FloatArray
    alphas: FloatArray
    alpha_bars: FloatArray

    def alpha_bar(self, t: npt.ArrayLike) -> FloatArray:
        steps = np.asarray(t, dtype=np.int64)
        if np.any(steps < 0) or np.any(steps > self.t_diff):
            msg = (
                f"Timesteps must lie in [0, {self.t_diff}],"
                f" got {steps.min()}..{steps.max()}"
            )
            raise ConfigError(msg)
        padded = np.concatenate(([1.0], self.alpha_bars))
        return padded[steps]


def build_noise_schedule(
    t_diff: int,
    beta_start: float = 1e-4,
    beta_end: float = 0.02,
) -> NoiseSchedule:
    if t_diff < 1:
        msg = f"t_diff must be >= 1, got {t_diff}"
        raise ConfigError(msg)
    if not 0 < beta_start < beta_end < 1:
        msg = (
            "Noise schedule needs 0 < beta_start < beta_end < 1,"
            f" got beta_start={beta_start}, beta_end={beta_end}"
        )
        raise ConfigError(msg)
    betas = np.linspace(beta_start, beta_end, t_diff, dtype=np.float64)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    if alpha_bars[-1] >= TERMINAL_SIGNAL:
        logger.warning(
            "Terminal alpha_bar %.4f keeps more than %.0f%% of the signal;"
            " raise beta_end or t_diff",
            alpha_bars[-1],
            TERMINAL_SIGNAL * 100,
        )
    for array in (betas, alphas, alpha_bars):
        array.flags.writeable = False
    return NoiseSchedule(
        t_diff=t_diff,
        betas=betas,
        alphas=alphas,
        alpha_bars=alpha_bars,
    )


def add_noise(
    x: FrameSequence,
    t: IntArray,
    noise: npt.ArrayLike,
    schedule: NoiseSchedule,
) -> Tensor:
    """`sqrt(abar_t) * x + sqrt(1 - abar_t) * noise`, one `t` per sample.

    The result is a constant: gradients never flow into the clean frames.
    """
    data = x.tensor.data
    eps = np.asarray(noise, dtype=data.dtype)
    steps = np.asarray(t).reshape(-1)
    if eps.shape != data.shape:
        msg = f"Noise shape {eps.shape} differs from frames {data.shape}"
        raise DimensionError(msg)
    if steps.shape != (x.batch,):
        msg = f"Expected {x.batch} timesteps, got shape {steps.shape}"
        raise DimensionError(msg)
    abar = schedule.alpha_bar(steps).reshape(-1, 1, 1, 1, 1)
    signal = np.sqrt(abar).astype(data.dtype)
    spread = np.sqrt(1.0 - abar).astype(data.dtype)
    return Tensor(signal * data + spread * eps, dtype=data.dtype.type)
