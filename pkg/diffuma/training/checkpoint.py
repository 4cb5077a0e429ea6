"""`DFMA` checkpoint container.

Layout, all integers little-endian:

    magic "DFMA" | u32 version
    u32 length | config text (UTF-8)
    u32 count  | parameter records
    u64 step, f64 lr, beta1, beta2, eps | u32 count | moment records
    u32 length | trainer state (JSON)
    u32 CRC-32 of every preceding byte

A record is `u16 name length | name | u8 dtype tag | u8 ndim | u32 dims |
raw scalars`.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import struct
import zlib
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np

from diffuma._utils import ByteReader, write_atomic
from diffuma.errors import CheckpointError
from diffuma.training.optim import AdamState


if TYPE_CHECKING:
    from pathlib import Path

    from diffuma._types import FloatArray


logger = logging.getLogger(__name__)

MAGIC = b"DFMA"
VERSION = 1

_DTYPES: dict[int, np.dtype[Any]] = {
    1: np.dtype("<f4"),
    2: np.dtype("<f8"),
}
_TAGS = {dtype: tag for tag, dtype in _DTYPES.items()}

_FIRST = "first/"
_SECOND = "second/"


@dataclasses.dataclass(slots=True, kw_only=True)
class Checkpoint:
    config_text: str
    params: dict[str, FloatArray]
    optimizer: AdamState
    trainer_state: dict[str, Any] = dataclasses.field(default_factory=dict)

    magic_format: ClassVar[struct.Struct] = struct.Struct("<4sI")
    length_format: ClassVar[struct.Struct] = struct.Struct("<I")
    name_format: ClassVar[struct.Struct] = struct.Struct("<H")
    tensor_format: ClassVar[struct.Struct] = struct.Struct("<BB")
    dim_format: ClassVar[struct.Struct] = struct.Struct("<I")
    optimizer_format: ClassVar[struct.Struct] = struct.Struct("<Qdddd")
    crc_format: ClassVar[struct.Struct] = struct.Struct("<I")

    @property
    def step(self) -> int:
        return self.optimizer.step

    def encode(self) -> bytes:
        parts = [self.magic_format.pack(MAGIC, VERSION)]
        parts.append(self._blob(self.config_text.encode("utf-8")))
        parts.append(self.length_format.pack(len(self.params)))
        parts.extend(
            self._record(name, value) for name, value in self.params.items()
        )
        opt = self.optimizer
        parts.append(
            self.optimizer_format.pack(
                opt.step,
                opt.lr,
                opt.beta1,
                opt.beta2,
                opt.eps,
            ),
        )
        moments = {
            **{_FIRST + k: v for k, v in opt.first.items()},
            **{_SECOND + k: v for k, v in opt.second.items()},
        }
        parts.append(self.length_format.pack(len(moments)))
        parts.extend(
            self._record(name, value) for name, value in moments.items()
        )
        state = json.dumps(self.trainer_state, sort_keys=True)
        parts.append(self._blob(state.encode("utf-8")))
        body = b"".join(parts)
        return body + self.crc_format.pack(zlib.crc32(body))

    @classmethod
    def decode(cls, data: bytes) -> Checkpoint:
        try:
            return cls._decode(data)
        except (EOFError, struct.error, UnicodeDecodeError, ValueError) as e:
            msg = f"Malformed checkpoint: {e}"
            raise CheckpointError(msg) from e

    @classmethod
    def _decode(cls, data: bytes) -> Checkpoint:
        if len(data) < cls.magic_format.size + cls.crc_format.size:
            msg = f"Checkpoint too short ({len(data)} bytes)"
            raise CheckpointError(msg)
        split = len(data) - cls.crc_format.size
        body, footer = data[:split], data[split:]
        reader = ByteReader(body)
        magic, version = reader.unpack(cls.magic_format)
        if magic != MAGIC:
            msg = f"Not a checkpoint: magic {magic!r}"
            raise CheckpointError(msg)
        if version != VERSION:
            msg = f"Unsupported checkpoint version {version}"
            raise CheckpointError(msg)
        (expected,) = cls.crc_format.unpack(footer)
        if zlib.crc32(body) != expected:
            msg = "Checkpoint checksum mismatch"
            raise CheckpointError(msg)

        config_text = cls._read_blob(reader).decode("utf-8")
        (count,) = reader.unpack(cls.length_format)
        params = dict(cls._read_record(reader) for _ in range(count))
        step, lr, beta1, beta2, eps = reader.unpack(cls.optimizer_format)
        (count,) = reader.unpack(cls.length_format)
        moments = dict(cls._read_record(reader) for _ in range(count))
        trainer_state = json.loads(cls._read_blob(reader).decode("utf-8"))
        if reader.remaining:
            msg = f"{reader.remaining} trailing bytes after trainer state"
            raise CheckpointError(msg)
        optimizer = AdamState(
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            step=step,
            first={
                k.removeprefix(_FIRST): v
                for k, v in moments.items()
                if k.startswith(_FIRST)
            },
            second={
                k.removeprefix(_SECOND): v
                for k, v in moments.items()
                if k.startswith(_SECOND)
            },
        )
        return cls(
            config_text=config_text,
            params=params,
            optimizer=optimizer,
            trainer_state=trainer_state,
        )

    @classmethod
    def _blob(cls, payload: bytes) -> bytes:
        return cls.length_format.pack(len(payload)) + payload

    @classmethod
    def _read_blob(cls, reader: ByteReader) -> bytes:
        (length,) = reader.unpack(cls.length_format)
        return reader.take(length)

    @classmethod
    def _record(cls, name: str, value: FloatArray) -> bytes:
        array = np.asarray(value)
        dtype = array.dtype.newbyteorder("<")
        if dtype not in _TAGS:
            msg = f"Cannot store {name!r} with dtype {array.dtype}"
            raise CheckpointError(msg)
        encoded = name.encode("utf-8")
        return b"".join(
            [
                cls.name_format.pack(len(encoded)),
                encoded,
                cls.tensor_format.pack(_TAGS[dtype], array.ndim),
                *(cls.dim_format.pack(size) for size in array.shape),
                np.ascontiguousarray(array, dtype=dtype).tobytes(),
            ],
        )

    @classmethod
    def _read_record(cls, reader: ByteReader) -> tuple[str, FloatArray]:
        (length,) = reader.unpack(cls.name_format)
        name = reader.take(length).decode("utf-8")
        tag, ndim = reader.unpack(cls.tensor_format)
        if tag not in _DTYPES:
            msg = f"Unknown scalar tag {tag} for {name!r}"
            raise CheckpointError(msg)
        dtype = _DTYPES[tag]
        shape = tuple(reader.unpack(cls.dim_format)[0] for _ in range(ndim))
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        array = np.frombuffer(reader.take(size), dtype=dtype).reshape(shape)
        return name, array.astype(dtype.newbyteorder("="))


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> None:
    write_atomic(path, checkpoint.encode())
    logger.info("Saved checkpoint %s at step %d", path, checkpoint.step)


def load_checkpoint(path: Path) -> Checkpoint:
    checkpoint = Checkpoint.decode(path.read_bytes())
    logger.info("Loaded checkpoint %s at step %d", path, checkpoint.step)
    return checkpoint


def checkpoint_path(directory: Path, step: int) -> Path:
    return directory / f"step-{step:06d}.dfma"


def latest_checkpoint(directory: Path) -> Path | None:
    candidates = sorted(directory.glob("step-*.dfma"))
    return candidates[-1] if candidates else None

