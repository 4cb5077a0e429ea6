"""Synthetic frame sequences with simple constant-velocity motion."""

from __future__ import annotations

import dataclasses
import enum
import logging
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from diffuma.autodiff import Tensor
from diffuma.errors import ConfigError
from diffuma.mamba import FrameSequence


if TYPE_CHECKING:
    from diffuma._types import FloatArray


logger = logging.getLogger(__name__)

MIN_SIZE = 16


class Motif(str, enum.Enum):
    drifting_stripes = "drifting-stripes"
    bouncing_blob = "bouncing-blob"
    advected_noise = "advected-noise"


@dataclasses.dataclass(frozen=True, slots=True, kw_only=True)
class SyntheticSpec:
    n_samples: int
    frames: int
    height: int
    width: int
    t_in: int
    motif: Motif | str = Motif.bouncing_blob
    seed: int = 0

    def validate(self) -> Motif:
        try:
            motif = Motif(self.motif)
        except ValueError as e:
            known = ", ".join(m.value for m in Motif)
            msg = f"Unknown motif {self.motif!r}; expected one of {known}"
            raise ConfigError(msg) from e
        if self.height < MIN_SIZE or self.width < MIN_SIZE:
            msg = (
                f"Frames must be at least {MIN_SIZE}x{MIN_SIZE},"
                f" got {self.height}x{self.width}"
            )
            raise ConfigError(msg)
        if self.n_samples < 1:
            msg = f"n_samples must be >= 1, got {self.n_samples}"
            raise ConfigError(msg)
        if not 1 <= self.t_in < self.frames:
            msg = (
                f"t_in must be < frames and >= 1,"
                f" got t_in={self.t_in}, frames={self.frames}"
            )
            raise ConfigError(msg)
        return motif


def drifting_stripes(
    rng: np.random.Generator,
    frames: int,
    height: int,
    width: int,
) -> tuple[FloatArray, float]:
    """Oblique sinusoidal stripes rolled along the width axis.

    Frame `t` is frame 0 shifted circularly by `round(v * t)` pixels.
    Returns the frames and the velocity `v`.
    """
    period = rng.uniform(4.0, width / 2)
    slant = rng.uniform(-0.5, 0.5)
    phase = rng.uniform(0.0, 2 * np.pi)
    velocity = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
    y, x = np.mgrid[:height, :width]
    first = 0.5 + 0.5 * np.sin(2 * np.pi * (x + slant * y) / period + phase)
    out = np.stack(
        [
            np.roll(first, round(velocity * t), axis=-1)
            for t in range(frames)
        ],
    )
    return out, float(velocity)


def _blob_sigma(height: int, width: int) -> float:
    return max(1.5, min(height, width) / 12)


def blob_trajectory(
    rng: np.random.Generator,
    frames: int,
    height: int,
    width: int,
) -> FloatArray:
    """Centre positions `[frames, 2]` bouncing off walls inset by 3 sigma."""
    margin = 3 * _blob_sigma(height, width)
    low = np.array([margin, margin])
    high = np.array([height - 1 - margin, width - 1 - margin])
    position = rng.uniform(low, high)
    angle = rng.uniform(0.0, 2 * np.pi)
    velocity = rng.uniform(1.0, 2.0) * np.array([np.sin(angle), np.cos(angle)])
    path = np.empty((frames, 2))
    for t in range(frames):
        path[t] = position
        position = position + velocity
        for axis in range(2):
            if position[axis] < low[axis]:
                position[axis] = 2 * low[axis] - position[axis]
                velocity[axis] = -velocity[axis]
            elif position[axis] > high[axis]:
                position[axis] = 2 * high[axis] - position[axis]
                velocity[axis] = -velocity[axis]
    return path


def bouncing_blob(
    rng: np.random.Generator,
    frames: int,
    height: int,
    width: int,
) -> FloatArray:
    sigma = _blob_sigma(height, width)
    path = blob_trajectory(rng, frames, height, width)
    y, x = np.mgrid[:height, :width]
    return np.stack(
        [
            np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * sigma**2))
            for cy, cx in path
        ],
    )


def advected_noise(
    rng: np.random.Generator,
    frames: int,
    height: int,
    width: int,
) -> FloatArray:
    """Smoothed periodic noise translated by an integer velocity per frame."""
    field = ndimage.gaussian_filter(
        rng.standard_normal((height, width)),
        sigma=rng.uniform(1.5, 3.0),
        mode="wrap",
    )
    field = (field - field.min()) / max(float(np.ptp(field)), 1e-12)
    vy, vx = rng.integers(-2, 3, size=2)
    return np.stack(
        [np.roll(field, (vy * t, vx * t), axis=(0, 1)) for t in range(frames)],
    )


def generate_synthetic(spec: SyntheticSpec) -> FrameSequence:
    """Deterministic `[n_samples, frames, 1, H, W]` sequence in `[0, 1]`."""
    motif = spec.validate()
    rng = np.random.default_rng(spec.seed)
    shape = (spec.frames, spec.height, spec.width)
    samples = []
    for _ in range(spec.n_samples):
        if motif is Motif.drifting_stripes:
            frames, _ = drifting_stripes(rng, *shape)
        elif motif is Motif.bouncing_blob:
            frames = bouncing_blob(rng, *shape)
        else:
            frames = advected_noise(rng, *shape)
        samples.append(frames)
    data = np.clip(np.stack(samples)[:, :, None], 0.0, 1.0).astype(np.float32)
    logger.info(
        "Generated %d %s samples of %d frames",
        spec.n_samples,
        motif.value,
        spec.frames,
    )
    return FrameSequence(
        Tensor(data, dtype=np.float32),
        spec.t_in,
        spec.frames - spec.t_in,
    )
