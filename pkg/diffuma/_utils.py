from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path
from typing import Any


class ByteReader:
    """Sequential reader over a byte buffer.

    Running past the end raises `EOFError`; callers translate it into their
    own format error.
    """

    def __init__(self, data: bytes) -> None:
        self._view = memoryview(data)
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self._view) - self.offset

    def take(self, size: int) -> bytes:
        if size < 0 or size > self.remaining:
            msg = (
                f"Need {size} bytes at offset {self.offset},"
                f" {self.remaining} left"
            )
            raise EOFError(msg)
        chunk = self._view[self.offset : self.offset + size].tobytes()
        self.offset += size
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple[Any, ...]:
        return fmt.unpack(self.take(fmt.size))


def write_atomic(path: Path, payload: bytes) -> None:
    """Writes through a sibling temporary file and renames it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as file:
            file.write(payload)
        Path(tmp).replace(path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
