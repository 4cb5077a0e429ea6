import contextlib
import zlib
from pathlib import Path

import numpy as np
import pytest

from diffuma.autodiff import Tensor
from diffuma.data import (
    ArchiveHeader,
    decode_archive,
    encode_archive,
    read_archive,
    read_header,
    split_inputs_targets,
    write_archive,
)
from diffuma.errors import (
    ArchiveError,
    ArchiveFormatError,
    CorruptArchiveError,
)
from diffuma.mamba import FrameSequence, SequenceKind


@pytest.fixture
def sequence() -> FrameSequence:
    data = np.random.default_rng(0).uniform(size=(2, 4, 1, 3, 5))
    return FrameSequence(Tensor(data, dtype=np.float32), 3, 1)


@pytest.fixture
def encoded(sequence: FrameSequence) -> bytes:
    return encode_archive(sequence)


def test_round_trip_is_exact(sequence: FrameSequence, encoded: bytes) -> None:
    restored = decode_archive(encoded)
    assert restored.t_in == 3  # noqa: PLR2004
    assert restored.t_out == 1
    assert restored.tensor.dtype == np.float32
    np.testing.assert_array_equal(restored.tensor.data, sequence.tensor.data)


def test_file_round_trip(tmp_path: Path, sequence: FrameSequence) -> None:
    path = tmp_path / "data.btchw"
    write_archive(sequence, path)
    assert read_header(path) == ArchiveHeader(2, 4, 1, 3, 5, t_in=3, t_out=1)
    np.testing.assert_array_equal(
        read_archive(path).tensor.data,
        sequence.tensor.data,
    )


def test_layout(encoded: bytes) -> None:
    assert encoded[:4] == b"BTCW"
    payload = 2 * 4 * 1 * 3 * 5 * 4
    assert len(encoded) == ArchiveHeader.format.size + payload + 4


def test_only_full_sequences(sequence: FrameSequence) -> None:
    x, _ = sequence.split()
    with pytest.raises(ArchiveFormatError, match="full"):
        encode_archive(x)


def test_flipped_payload_byte(encoded: bytes) -> None:
    data = bytearray(encoded)
    data[ArchiveHeader.format.size + 7] ^= 0x01
    with pytest.raises(CorruptArchiveError):
        decode_archive(bytes(data))


def test_bad_magic(encoded: bytes) -> None:
    with pytest.raises(ArchiveFormatError, match="magic"):
        decode_archive(b"XXXX" + encoded[4:])


def test_inconsistent_split(sequence: FrameSequence) -> None:
    header = ArchiveHeader(2, 4, 1, 3, 5, t_in=3, t_out=2).pack()
    body = encode_archive(sequence)[ArchiveHeader.format.size :]
    with pytest.raises(ArchiveFormatError, match="splits"):
        decode_archive(header + body)


def test_non_finite_payload_rejected() -> None:
    data = np.zeros((1, 2, 1, 2, 2), dtype=np.float32)
    encoded = bytearray(
        encode_archive(FrameSequence(Tensor(data), 1, 1)),
    )
    # Patch a NaN in and fix up the checksum so only the value check fires.
    size = ArchiveHeader.format.size
    payload = np.frombuffer(bytes(encoded[size:-4]), dtype="<f4").copy()
    payload[0] = np.nan
    raw = payload.tobytes()
    crc = ArchiveHeader.crc_format.pack(zlib.crc32(raw))
    with pytest.raises(ArchiveFormatError, match="non-finite"):
        decode_archive(bytes(encoded[:size]) + raw + crc)


def test_single_byte_mutations_raise(encoded: bytes) -> None:
    rng = np.random.default_rng(0)
    for _ in range(1000):
        data = bytearray(encoded)
        index = int(rng.integers(len(data)))
        data[index] ^= int(rng.integers(1, 256))
        with pytest.raises(ArchiveError):
            decode_archive(bytes(data))


@pytest.mark.parametrize("cut", [1, 4, 20, 37, 100])
def test_truncation_raises(encoded: bytes, cut: int) -> None:
    with pytest.raises(ArchiveError):
        decode_archive(encoded[:-cut])


def test_random_garbage_never_crashes() -> None:
    rng = np.random.default_rng(1)
    for _ in range(1000):
        size = int(rng.integers(0, 200))
        data = rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()
        with contextlib.suppress(ArchiveError):
            decode_archive(data)


def test_split_inputs_targets(sequence: FrameSequence) -> None:
    x, y = split_inputs_targets(sequence)
    assert x.kind is SequenceKind.input
    assert x.frames == 3  # noqa: PLR2004
    assert y.frames == 1
