from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from diffuma.autodiff import Tensor
from diffuma.errors import ConfigError, DimensionError
from diffuma.mamba import FrameSequence


if TYPE_CHECKING:
    from diffuma._types import BoolArray, FloatArray


logger = logging.getLogger(__name__)

DROP_RATE = 0.013


def _repair_sample(frames: FloatArray, bad: BoolArray) -> FloatArray:
    good = np.flatnonzero(~bad)
    if good.size == 0:
        msg = "Every frame of the sequence is marked bad"
        raise ConfigError(msg)
    out = frames.copy()
    for t in np.flatnonzero(bad):
        after = good[np.searchsorted(good, t) :]
        before = good[: np.searchsorted(good, t)]
        if before.size == 0:
            out[t] = frames[after[0]]
        elif after.size == 0:
            out[t] = frames[before[-1]]
        else:
            lo, hi = before[-1], after[0]
            weight = (t - lo) / (hi - lo)
            out[t] = (1 - weight) * frames[lo] + weight * frames[hi]
    return out


def repair_frames(
    seq: FrameSequence,
    bad_mask: npt.ArrayLike,
) -> FrameSequence:
    """Replaces bad frames by linear interpolation in time.

    `bad_mask` is `[T]` (shared by all samples) or `[B, T]`. Runs touching
    either end of the sequence copy the nearest good frame.
    """
    data = seq.tensor.data
    mask = np.asarray(bad_mask, dtype=bool)
    if mask.ndim == 1 and mask.shape[0] == data.shape[1]:
        mask = np.broadcast_to(mask, data.shape[:2])
    if mask.shape != data.shape[:2]:
        msg = f"Mask {mask.shape} does not match [B, T] = {data.shape[:2]}"
        raise DimensionError(msg)
    if not mask.any():
        return seq

    repaired = np.stack(
        [
            _repair_sample(frames, bad)
            for frames, bad in zip(data, mask, strict=True)
        ],
    ).astype(data.dtype)
    logger.info(
        "Repaired %d of %d frames (%.2f%%)",
        int(mask.sum()),
        mask.size,
        100 * mask.mean(),
    )
    return FrameSequence(
        Tensor(repaired, dtype=data.dtype.type),
        seq.t_in,
        seq.t_out,
        seq.kind,
    )


def random_bad_mask(
    rng: np.random.Generator,
    shape: tuple[int, int],
    rate: float = DROP_RATE,
) -> BoolArray:
    """Marks frames bad independently with probability `rate`.

    At least one frame of every sample stays good.
    """
    if not 0 <= rate < 1:
        msg = f"Drop rate must lie in [0, 1), got {rate}"
        raise ConfigError(msg)
    mask = rng.random(shape) < rate
    for row in mask:
        if row.all():
            row[rng.integers(row.size)] = False
    return mask
