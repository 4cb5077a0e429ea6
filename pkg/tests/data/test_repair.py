import numpy as np
import numpy.typing as npt
import pytest

from diffuma.autodiff import Tensor
from diffuma.data import random_bad_mask, repair_frames
from diffuma.errors import ConfigError, DimensionError
from diffuma.mamba import FrameSequence


def _ramp(frames: int) -> FrameSequence:
    """Frame `t` is filled with the value `t`."""
    data = np.broadcast_to(
        np.arange(frames, dtype=np.float64).reshape(1, frames, 1, 1, 1),
        (2, frames, 1, 4, 4),
    ).copy()
    return FrameSequence(Tensor(data, dtype=np.float64), frames - 1, 1)


def _values(seq: FrameSequence) -> np.ndarray:
    return seq.tensor.data[0, :, 0, 0, 0]


def test_single_gap_takes_midpoint() -> None:
    seq = _ramp(5)
    seq.tensor.data[:, 2] = 100.0
    repaired = repair_frames(seq, [False, False, True, False, False])
    np.testing.assert_allclose(_values(repaired), [0, 1, 2, 3, 4])


def test_two_frame_gap_uses_thirds() -> None:
    seq = _ramp(5)
    seq.tensor.data[:, 1:3] = -1.0
    seq.tensor.data[:, 3] = 6.0
    repaired = repair_frames(seq, [False, True, True, False, False])
    np.testing.assert_allclose(_values(repaired), [0, 2, 4, 6, 4])


def test_nothing_bad_is_identity() -> None:
    seq = _ramp(4)
    assert repair_frames(seq, np.zeros(4, dtype=bool)) is seq


def test_edges_copy_nearest_good_frame() -> None:
    seq = _ramp(5)
    repaired = repair_frames(seq, [True, False, False, False, True])
    np.testing.assert_array_equal(_values(repaired), [1, 1, 2, 3, 3])


def test_per_sample_masks() -> None:
    seq = _ramp(3)
    seq.tensor.data[1, 1] = 50.0
    mask = np.array([[False, False, False], [False, True, False]])
    repaired = repair_frames(seq, mask).tensor.data
    np.testing.assert_array_equal(repaired[0, :, 0, 0, 0], [0, 1, 2])
    np.testing.assert_array_equal(repaired[1, :, 0, 0, 0], [0, 1, 2])


def test_all_bad_rejected() -> None:
    with pytest.raises(ConfigError, match="Every frame"):
        repair_frames(_ramp(3), [True, True, True])


@pytest.mark.parametrize(
    "mask",
    [
        [True, False],
        [True, False, False, False],
        [[True, False, False]],
        np.zeros((2, 3, 1), dtype=bool),
    ],
)
def test_mask_shape_checked(mask: npt.ArrayLike) -> None:
    with pytest.raises(DimensionError, match="Mask"):
        repair_frames(_ramp(3), mask)


def test_random_mask_keeps_a_good_frame() -> None:
    mask = random_bad_mask(np.random.default_rng(0), (50, 3), rate=0.9)
    assert mask.any()
    assert not mask.all(axis=1).any()


def test_random_mask_rate_bounds() -> None:
    with pytest.raises(ConfigError, match="Drop rate"):
        random_bad_mask(np.random.default_rng(0), (2, 3), rate=1.0)
