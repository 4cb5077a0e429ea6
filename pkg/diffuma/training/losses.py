from __future__ import annotations

import dataclasses

from diffuma.autodiff import Tensor, abs_, add, mean, scale, square, sub
from diffuma.errors import ConfigError, DimensionError


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class LossReport:
    """Loss values of one step as Python floats.

    `l_total` is the value of the tensor the step backpropagated.
    """

    step: int
    l_diff: float
    l_recon: float
    l_total: float
    lambda_: float
    lr: float


def _check_pair(name: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        msg = f"{name}: shapes {a.shape} and {b.shape} differ"
        raise DimensionError(msg)


def diffusion_loss(noise: Tensor, predicted: Tensor) -> Tensor:
    _check_pair("diffusion_loss", noise, predicted)
    return mean(square(sub(noise, predicted)))


def reconstruction_loss(prediction: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error; the subgradient at a tie is 0."""
    _check_pair("reconstruction_loss", prediction, target)
    return mean(abs_(sub(prediction, target)))


def total_loss(l_diff: Tensor, l_recon: Tensor, lambda_: float) -> Tensor:
    if lambda_ < 0:
        msg = f"lambda must be >= 0, got {lambda_}"
        raise ConfigError(msg)
    return add(l_diff, scale(l_recon, lambda_))
