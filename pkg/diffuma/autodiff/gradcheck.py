from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from diffuma.autodiff.tensor import Tensor, backward
from diffuma.errors import GradientCheckError


_MIN_EPS = 1e-6
_MAX_EPS = 1e-3


def _evaluate(fn: Callable[[], Tensor]) -> float:
    value = fn().item()
    if not np.isfinite(value):
        msg = f"Closure produced a non-finite value {value}"
        raise GradientCheckError(msg)
    return value


def check_gradients(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    eps: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    `fn` must return a scalar built from `inputs`; the inputs are perturbed
    in place and restored afterwards. Error per coordinate is
    `|analytic - numeric| / max(1, |analytic|)`.
    """
    if not _MIN_EPS <= eps <= _MAX_EPS:
        msg = f"eps must lie in [{_MIN_EPS}, {_MAX_EPS}], got {eps}"
        raise GradientCheckError(msg)
    for tensor in inputs:
        if tensor.dtype != np.float64:
            msg = f"Gradient checks need float64 inputs, got {tensor.dtype}"
            raise GradientCheckError(msg)

    for tensor in inputs:
        tensor.requires_grad = True
        tensor.zero_grad()
    output = fn()
    _evaluate(lambda: output)
    backward(output)
    analytic = [
        np.zeros_like(tensor.data) if tensor.grad is None else tensor.grad
        for tensor in inputs
    ]

    worst = 0.0
    for tensor, grad in zip(inputs, analytic, strict=True):
        flat = tensor.data.reshape(-1)
        flat_grad = grad.reshape(-1)
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + eps
            plus = _evaluate(fn)
            flat[index] = original - eps
            minus = _evaluate(fn)
            flat[index] = original
            numeric = (plus - minus) / (2 * eps)
            error = abs(flat_grad[index] - numeric) / max(
                1.0,
                abs(flat_grad[index]),
            )
            worst = max(worst, float(error))
    return worst
