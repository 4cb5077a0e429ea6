from diffuma.mamba.block import BiMambaBlock
from diffuma.mamba.codec import (
    SpatialDecoder,
    SpatialEncoder,
    TemporalProjection,
)
from diffuma.mamba.path import MambaOutput, MambaPath, MambaPathConfig
from diffuma.mamba.sequences import FrameSequence, LatentSequence, SequenceKind
from diffuma.mamba.ssm import (
    Direction,
    SsmBranch,
    discretize,
    scan_recurrence,
    selective_scan,
)


__all__ = [
    "BiMambaBlock",
    "Direction",
    "FrameSequence",
    "LatentSequence",
    "MambaOutput",
    "MambaPath",
    "MambaPathConfig",
    "SequenceKind",
    "SpatialDecoder",
    "SpatialEncoder",
    "SsmBranch",
    "TemporalProjection",
    "discretize",
    "scan_recurrence",
    "selective_scan",
]
