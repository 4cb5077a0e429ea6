"""`BTCW` sequence archive.

    magic "BTCW" | u32 version | u32 B, T, C, H, W | u8 scalar tag |
    u32 t_in | u32 t_out | payload | u32 CRC-32 of the payload

The payload is row-major little-endian float32 (tag 1).
"""

from __future__ import annotations

import dataclasses
import logging
import struct
import zlib
from typing import TYPE_CHECKING, ClassVar

import numpy as np

from diffuma._utils import ByteReader, write_atomic
from diffuma.autodiff import Tensor
from diffuma.errors import ArchiveFormatError, CorruptArchiveError
from diffuma.mamba import FrameSequence, SequenceKind


if TYPE_CHECKING:
    from pathlib import Path


logger = logging.getLogger(__name__)

MAGIC = b"BTCW"
VERSION = 1
FLOAT32 = 1

_SCALARS = {FLOAT32: np.dtype("<f4")}


@dataclasses.dataclass(frozen=True, slots=True)
class ArchiveHeader:
    batch: int
    frames: int
    channels: int
    height: int
    width: int
    t_in: int
    t_out: int
    scalar_tag: int = FLOAT32

    format: ClassVar[struct.Struct] = struct.Struct("<4sI5IBII")
    crc_format: ClassVar[struct.Struct] = struct.Struct("<I")

    @property
    def shape(self) -> tuple[int, int, int, int, int]:
        return self.batch, self.frames, self.channels, self.height, self.width

    @property
    def payload_size(self) -> int:
        count = 1
        for size in self.shape:
            count *= size
        return count * _SCALARS[self.scalar_tag].itemsize

    def pack(self) -> bytes:
        return self.format.pack(
            MAGIC,
            VERSION,
            *self.shape,
            self.scalar_tag,
            self.t_in,
            self.t_out,
        )

    @classmethod
    def unpack(cls, reader: ByteReader) -> ArchiveHeader:
        magic, version, *dims, tag, t_in, t_out = reader.unpack(cls.format)
        if magic != MAGIC:
            msg = f"Not a BTCW archive: magic {magic!r}"
            raise ArchiveFormatError(msg)
        if version != VERSION:
            msg = f"Unsupported archive version {version}"
            raise ArchiveFormatError(msg)
        if tag not in _SCALARS:
            msg = f"Unsupported scalar type tag {tag}"
            raise ArchiveFormatError(msg)
        header = cls(*dims, t_in=t_in, t_out=t_out, scalar_tag=tag)
        if t_in + t_out != header.frames:
            msg = (
                f"Header splits {header.frames} frames as"
                f" t_in={t_in} + t_out={t_out}"
            )
            raise ArchiveFormatError(msg)
        return header


def encode_archive(seq: FrameSequence) -> bytes:
    if seq.kind is not SequenceKind.full:
        msg = f"Only full sequences are archived, got {seq.kind.name}"
        raise ArchiveFormatError(msg)
    header = ArchiveHeader(*seq.tensor.shape, t_in=seq.t_in, t_out=seq.t_out)
    payload = np.ascontiguousarray(seq.tensor.data, dtype="<f4").tobytes()
    return (
        header.pack()
        + payload
        + ArchiveHeader.crc_format.pack(zlib.crc32(payload))
    )


def decode_archive(data: bytes) -> FrameSequence:
    """Parses an archive; any malformed input raises an `ArchiveError`."""
    reader = ByteReader(data)
    try:
        header = ArchiveHeader.unpack(reader)
    except (EOFError, struct.error) as e:
        msg = f"Truncated archive header: {e}"
        raise ArchiveFormatError(msg) from e
    expected = header.payload_size + ArchiveHeader.crc_format.size
    if reader.remaining != expected:
        msg = (
            f"Archive of shape {header.shape} needs {expected} bytes after"
            f" the header, found {reader.remaining}"
        )
        raise ArchiveFormatError(msg)
    payload = reader.take(header.payload_size)
    (crc,) = reader.unpack(ArchiveHeader.crc_format)
    if zlib.crc32(payload) != crc:
        msg = "Archive payload checksum mismatch"
        raise CorruptArchiveError(msg)

    dtype = _SCALARS[header.scalar_tag]
    array = np.frombuffer(payload, dtype=dtype).reshape(header.shape)
    if not np.all(np.isfinite(array)):
        msg = "Archive payload contains non-finite values"
        raise ArchiveFormatError(msg)
    return FrameSequence(
        Tensor(array.astype(np.float32), dtype=np.float32),
        header.t_in,
        header.t_out,
    )


def write_archive(seq: FrameSequence, path: Path) -> None:
    write_atomic(path, encode_archive(seq))
    logger.info(
        "Wrote archive %s with shape %s (t_in=%d)",
        path,
        seq.tensor.shape,
        seq.t_in,
    )


def read_archive(path: Path) -> FrameSequence:
    return decode_archive(path.read_bytes())


def read_header(path: Path) -> ArchiveHeader:
    with path.open("rb") as file:
        head = file.read(ArchiveHeader.format.size)
    try:
        return ArchiveHeader.unpack(ByteReader(head))
    except (EOFError, struct.error) as e:
        msg = f"Truncated archive header: {e}"
        raise ArchiveFormatError(msg) from e


def split_inputs_targets(
    seq: FrameSequence,
) -> tuple[FrameSequence, FrameSequence]:
    """`X` is the first `t_in` frames, `Y` the remaining `t_out` frames."""
    return seq.split()
