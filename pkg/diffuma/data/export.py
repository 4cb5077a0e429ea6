from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from diffuma._utils import write_atomic
from diffuma.errors import DimensionError


if TYPE_CHECKING:
    from pathlib import Path


logger = logging.getLogger(__name__)

MAXVAL = 255


def to_pixels(frame: npt.ArrayLike) -> npt.NDArray[np.uint8]:
    """`floor(255 * clip(v, 0, 1) + 0.5)` as bytes."""
    values = np.clip(np.asarray(frame, dtype=np.float64), 0.0, 1.0)
    return np.floor(MAXVAL * values + 0.5).astype(np.uint8)


def encode_pgm(frame: npt.ArrayLike) -> bytes:
    pixels = to_pixels(frame)
    if pixels.ndim != 2:  # noqa: PLR2004
        msg = f"PGM frames are [H, W], got {pixels.shape}"
        raise DimensionError(msg)
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n{MAXVAL}\n".encode("ascii")
    return header + pixels.tobytes()


def export_pgm(frames: npt.ArrayLike, out_dir: Path) -> list[Path]:
    """Writes `[B, T, 1, H, W]` frames as `s{sample}_f{frame}.pgm`."""
    data = np.asarray(frames)
    if data.ndim != 5 or data.shape[2] != 1:  # noqa: PLR2004
        msg = (
            f"PGM export needs single-channel [B, T, 1, H, W],"
            f" got {data.shape}"
        )
        raise DimensionError(msg)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for sample, sequence in enumerate(data):
        for index, frame in enumerate(sequence):
            path = out_dir / f"s{sample}_f{index}.pgm"
            write_atomic(path, encode_pgm(frame[0]))
            written.append(path)
    logger.info("Exported %d PGM frames to %s", len(written), out_dir)
    return written
