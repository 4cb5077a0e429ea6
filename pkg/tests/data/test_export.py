from pathlib import Path

import numpy as np
import pytest

from diffuma.data import encode_pgm, export_pgm
from diffuma.data.export import to_pixels
from diffuma.errors import DimensionError


def test_pixel_quantisation() -> None:
    np.testing.assert_array_equal(
        to_pixels([-0.5, 0.0, 0.5, 1.0, 1.2]),
        [0, 0, 128, 255, 255],
    )


def test_pgm_layout() -> None:
    frame = np.array([[0.0, 1.0, 0.5], [1.0, 0.0, 0.25]])
    data = encode_pgm(frame)
    header = b"P5\n3 2\n255\n"
    assert data.startswith(header)
    assert data[len(header) :] == bytes([0, 255, 128, 255, 0, 64])


def test_pgm_needs_two_axes() -> None:
    with pytest.raises(DimensionError):
        encode_pgm(np.zeros((1, 2, 2)))


def test_export_names(tmp_path: Path) -> None:
    frames = np.random.default_rng(0).uniform(size=(2, 3, 1, 4, 5))
    written = export_pgm(frames, tmp_path / "out")
    assert len(written) == 6  # noqa: PLR2004
    assert sorted(p.name for p in written) == sorted(
        f"s{s}_f{f}.pgm" for s in range(2) for f in range(3)
    )
    assert written[0].read_bytes().startswith(b"P5\n5 4\n255\n")


def test_export_needs_single_channel(tmp_path: Path) -> None:
    with pytest.raises(DimensionError, match="single-channel"):
        export_pgm(np.zeros((1, 2, 3, 4, 4)), tmp_path)
