from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Mapping
from typing import TYPE_CHECKING

import numpy as np

from diffuma.errors import CheckpointError, NumericalError


if TYPE_CHECKING:
    from diffuma._types import FloatArray
    from diffuma.autodiff import Tensor


logger = logging.getLogger(__name__)


@dataclasses.dataclass(slots=True, kw_only=True)
class AdamState:
    """First and second moments per parameter name, in parameter dtype."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first: dict[str, FloatArray] = dataclasses.field(default_factory=dict)
    second: dict[str, FloatArray] = dataclasses.field(default_factory=dict)

    def moments(
        self,
        name: str,
        like: FloatArray,
    ) -> tuple[FloatArray, FloatArray]:
        if name not in self.first:
            self.first[name] = np.zeros_like(like)
            self.second[name] = np.zeros_like(like)
        return self.first[name], self.second[name]

    def check_layout(self, params: Mapping[str, Tensor]) -> None:
        for name, tensor in params.items():
            for moments in (self.first, self.second):
                stored = moments.get(name)
                if stored is not None and stored.shape != tensor.shape:
                    msg = (
                        f"Optimizer moment for {name!r} has shape"
                        f" {stored.shape}, parameter has {tensor.shape}"
                    )
                    raise CheckpointError(msg)


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, FloatArray | None],
    state: AdamState,
) -> None:
    """One bias-corrected Adam update of every parameter in place.

    A missing gradient counts as zero. All gradients are checked before any
    parameter is touched.
    """
    for name in params:
        grad = grads.get(name)
        if grad is not None and not np.all(np.isfinite(grad)):
            msg = "Non-finite gradient"
            raise NumericalError(msg, name=name)

    state.step += 1
    t = state.step
    correction1 = 1 - state.beta1**t
    correction2 = 1 - state.beta2**t
    for name, tensor in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        m, v = state.moments(name, tensor.data)
        dtype = tensor.dtype.type
        m *= dtype(state.beta1)
        m += dtype(1 - state.beta1) * grad
        v *= dtype(state.beta2)
        v += dtype(1 - state.beta2) * grad * grad
        m_hat = m / dtype(correction1)
        v_hat = v / dtype(correction2)
        update = dtype(state.lr) * m_hat / (np.sqrt(v_hat) + dtype(state.eps))
        tensor.data = tensor.data - update.astype(tensor.dtype)


def clip_grad_norm(params: Mapping[str, Tensor], max_norm: float) -> float:
    """Rescales all gradients so their global L2 norm is at most `max_norm`.

    Returns the norm before clipping.
    """
    total = math.sqrt(
        sum(
            float(np.sum(np.square(tensor.grad, dtype=np.float64)))
            for tensor in params.values()
            if tensor.grad is not None
        ),
    )
    if total > max_norm:
        factor = max_norm / (total + 1e-12)
        logger.debug("Clipping gradient norm %.4f to %.4f", total, max_norm)
        for tensor in params.values():
            if tensor.grad is not None:
                tensor.grad = tensor.grad * tensor.dtype.type(factor)
    return total


def warmup_lr(step: int, base_lr: float, warmup_steps: int) -> float:
    """Linear warmup to `base_lr` over `warmup_steps`, constant afterwards.

    `step` counts from 1.
    """
    if warmup_steps <= 0 or step >= warmup_steps:
        return base_lr
    return base_lr * step / warmup_steps
