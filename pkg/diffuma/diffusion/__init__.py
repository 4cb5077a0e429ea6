from diffuma.diffusion.conditioning import (
    ConditioningVector,
    ContextProjector,
    TimestepEmbedder,
    make_context,
    timestep_embedding,
)
from diffuma.diffusion.dit import Attention, DitBlock, FinalLayer, modulate
from diffuma.diffusion.patches import (
    PatchEmbed,
    PatchGrid,
    patchify,
    unpatchify,
)
from diffuma.diffusion.path import DiffusionPath, DiffusionPathConfig, fuse
from diffuma.diffusion.schedule import (
    NoiseSchedule,
    add_noise,
    build_noise_schedule,
)


__all__ = [
    "Attention",
    "ConditioningVector",
    "ContextProjector",
    "DiffusionPath",
    "DiffusionPathConfig",
    "DitBlock",
    "FinalLayer",
    "NoiseSchedule",
    "PatchEmbed",
    "PatchGrid",
    "TimestepEmbedder",
    "add_noise",
    "build_noise_schedule",
    "fuse",
    "make_context",
    "modulate",
    "patchify",
    "timestep_embedding",
    "unpatchify",
]
