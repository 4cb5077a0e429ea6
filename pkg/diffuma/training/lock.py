from __future__ import annotations

import contextlib
import dataclasses
import logging
import os
from collections.abc import Iterator
from pathlib import Path

from diffuma.config import TrainSection
from diffuma.errors import CheckpointError


logger = logging.getLogger(__name__)

LOCK_FILE = ".lock"


@dataclasses.dataclass(frozen=True, slots=True)
class CheckpointLock:
    path: Path

    @property
    def directory(self) -> Path:
        return self.path.parent


@contextlib.contextmanager
def hold_lock(directory: Path) -> Iterator[CheckpointLock]:
    """Single-writer lock on a checkpoint directory, released on exit."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / LOCK_FILE
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        msg = (
            f"Checkpoint directory {directory} is locked by another writer;"
            f" remove {path} if that process is gone"
        )
        raise CheckpointError(msg) from e
    with os.fdopen(fd, "w") as file:
        file.write(f"{os.getpid()}\n")
    logger.debug("Acquired %s", path)
    try:
        yield CheckpointLock(path)
    finally:
        path.unlink(missing_ok=True)
        logger.debug("Released %s", path)


@contextlib.contextmanager
def checkpoint_lock(train: TrainSection) -> Iterator[CheckpointLock]:
    with hold_lock(train.checkpoint_dir) as lock:
        yield lock
