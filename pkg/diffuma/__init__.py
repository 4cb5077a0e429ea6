from diffuma.config import (
    DataSection,
    ModelSection,
    RunConfig,
    TrainSection,
    load_config,
    parse_config,
)
from diffuma.container import RunOptions, create_container
from diffuma.errors import (
    ArchiveError,
    ArchiveFormatError,
    CheckpointError,
    ConfigError,
    CorruptArchiveError,
    DiffumaError,
    DimensionError,
    NumericalError,
)
from diffuma.mamba import FrameSequence, LatentSequence
from diffuma.model import Diffuma, Prediction, build_model, rng_streams
from diffuma.settings import DiffumaSettings, get_settings


__all__ = [
    "ArchiveError",
    "ArchiveFormatError",
    "CheckpointError",
    "ConfigError",
    "CorruptArchiveError",
    "DataSection",
    "Diffuma",
    "DiffumaError",
    "DiffumaSettings",
    "DimensionError",
    "FrameSequence",
    "LatentSequence",
    "ModelSection",
    "NumericalError",
    "Prediction",
    "RunConfig",
    "RunOptions",
    "TrainSection",
    "build_model",
    "create_container",
    "get_settings",
    "load_config",
    "parse_config",
    "rng_streams",
]

__version__ = "0.1.0"
