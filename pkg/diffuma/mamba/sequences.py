from __future__ import annotations

import dataclasses
import enum
import logging

import numpy as np

from diffuma.autodiff import Tensor
from diffuma.errors import DimensionError, NumericalError


logger = logging.getLogger(__name__)

FRAME_RANGE = (0.0, 1.0)
_SOFT_LOW = -0.5
_SOFT_HIGH = 1.5


class SequenceKind(enum.Enum):
    input = enum.auto()
    target = enum.auto()
    prediction = enum.auto()
    full = enum.auto()


@dataclasses.dataclass(frozen=True, slots=True)
class FrameSequence:
    """A `[B, T, C, H, W]` tensor of frames with its history/horizon split.

    `T` equals `t_in` for inputs, `t_out` for targets and predictions and
    `t_in + t_out` for a full sequence.
    """

    tensor: Tensor
    t_in: int
    t_out: int
    kind: SequenceKind = SequenceKind.full

    def __post_init__(self) -> None:
        if self.tensor.ndim != 5:  # noqa: PLR2004
            msg = f"Frame sequences are BTCHW, got shape {self.tensor.shape}"
            raise DimensionError(msg)
        expected = {
            SequenceKind.input: self.t_in,
            SequenceKind.target: self.t_out,
            SequenceKind.prediction: self.t_out,
            SequenceKind.full: self.t_in + self.t_out,
        }[self.kind]
        if self.frames != expected:
            msg = (
                f"{self.kind.name} sequence must have {expected} frames,"
                f" got {self.frames}"
            )
            raise DimensionError(msg)
        data = self.tensor.data
        if not np.all(np.isfinite(data)):
            msg = "Frame sequence contains non-finite values"
            raise NumericalError(msg, name=self.kind.name)
        if data.size and (data.min() < _SOFT_LOW or data.max() > _SOFT_HIGH):
            logger.warning(
                "%s frames outside the expected [0, 1] range: [%.3f, %.3f]",
                self.kind.name,
                float(data.min()),
                float(data.max()),
            )

    @property
    def batch(self) -> int:
        return self.tensor.shape[0]

    @property
    def frames(self) -> int:
        return self.tensor.shape[1]

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        _, _, c, h, w = self.tensor.shape
        return c, h, w

    def split(self) -> tuple[FrameSequence, FrameSequence]:
        """Returns `(X, Y)`: the first `t_in` and the last `t_out` frames."""
        if self.kind is not SequenceKind.full:
            msg = f"Only full sequences can be split, got {self.kind.name}"
            raise DimensionError(msg)
        data = self.tensor.data
        x = Tensor(data[:, : self.t_in], dtype=data.dtype.type)
        y = Tensor(data[:, self.t_in :], dtype=data.dtype.type)
        return (
            FrameSequence(x, self.t_in, self.t_out, SequenceKind.input),
            FrameSequence(y, self.t_in, self.t_out, SequenceKind.target),
        )


@dataclasses.dataclass(frozen=True, slots=True)
class LatentSequence:
    tensor: Tensor
    layer_index: int = 0

    def __post_init__(self) -> None:
        if self.tensor.ndim != 3:  # noqa: PLR2004
            msg = f"Latent sequences are [B, T, D], got {self.tensor.shape}"
            raise DimensionError(msg)

    @property
    def steps(self) -> int:
        return self.tensor.shape[1]

    @property
    def dim(self) -> int:
        return self.tensor.shape[2]
