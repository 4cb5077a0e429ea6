import math

import numpy as np
import pytest

from diffuma.autodiff import Tensor
from diffuma.errors import CheckpointError, NumericalError
from diffuma.training import AdamState, adam_step, clip_grad_norm, warmup_lr


def _params(*values: float) -> dict[str, Tensor]:
    return {
        f"p{index}": Tensor(np.full(3, value), requires_grad=True)
        for index, value in enumerate(values)
    }


def test_zero_gradients_keep_parameters() -> None:
    params = _params(1.0)
    state = AdamState(lr=0.1)
    adam_step(params, {"p0": np.zeros(3)}, state)
    np.testing.assert_array_equal(params["p0"].data, 1.0)
    assert state.step == 1


def test_missing_gradient_counts_as_zero() -> None:
    params = _params(1.0)
    state = AdamState(lr=0.1)
    adam_step(params, {}, state)
    np.testing.assert_array_equal(params["p0"].data, 1.0)


def test_first_update_is_lr_times_sign() -> None:
    params = _params(1.0)
    state = AdamState(lr=0.1)
    adam_step(params, {"p0": np.ones(3)}, state)
    np.testing.assert_allclose(params["p0"].data, 0.9, rtol=1e-6)
    adam_step(params, {"p0": -np.ones(3)}, state)
    assert state.step == 2  # noqa: PLR2004
    assert np.all(params["p0"].data > 0.9)  # noqa: PLR2004


def test_identical_parameters_update_identically() -> None:
    params = _params(0.5, 0.5)
    state = AdamState(lr=0.01)
    grad = np.array([0.3, -1.0, 2.0])
    for _ in range(5):
        adam_step(params, {"p0": grad, "p1": grad.copy()}, state)
    np.testing.assert_array_equal(params["p0"].data, params["p1"].data)


def test_non_finite_gradient_names_parameter() -> None:
    params = _params(1.0, 2.0)
    state = AdamState()
    with pytest.raises(NumericalError) as info:
        adam_step(
            params,
            {"p0": np.ones(3), "p1": np.array([0.0, np.nan, 0.0])},
            state,
        )
    assert info.value.name == "p1"
    assert state.step == 0
    np.testing.assert_array_equal(params["p0"].data, 1.0)


def test_moment_layout_check() -> None:
    params = _params(1.0)
    state = AdamState(first={"p0": np.zeros(4)}, second={"p0": np.zeros(4)})
    with pytest.raises(CheckpointError, match="'p0'"):
        state.check_layout(params)


def test_clip_grad_norm() -> None:
    params = _params(0.0, 0.0)
    params["p0"].grad = np.array([3.0, 0.0, 0.0])
    params["p1"].grad = np.array([0.0, 4.0, 0.0])
    norm = clip_grad_norm(params, 1.0)
    assert norm == pytest.approx(5.0)
    grads = [p.grad for p in params.values() if p.grad is not None]
    clipped = math.sqrt(sum(float(np.sum(g**2)) for g in grads))
    assert clipped == pytest.approx(1.0, rel=1e-6)


def test_clip_leaves_small_gradients() -> None:
    params = _params(0.0)
    params["p0"].grad = np.array([0.1, 0.0, 0.0])
    clip_grad_norm(params, 1.0)
    np.testing.assert_array_equal(params["p0"].grad, [0.1, 0.0, 0.0])


@pytest.mark.parametrize(
    ("step", "warmup", "expected"),
    [(1, 4, 0.25), (2, 4, 0.5), (4, 4, 1.0), (10, 4, 1.0), (1, 0, 1.0)],
)
def test_warmup_lr(step: int, warmup: int, expected: float) -> None:
    assert warmup_lr(step, 1.0, warmup) == expected
