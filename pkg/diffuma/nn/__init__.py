from diffuma.nn.layers import Conv2d, ConvTranspose2d, LayerNorm, Linear
from diffuma.nn.module import Module, parameter


__all__ = [
    "Conv2d",
    "ConvTranspose2d",
    "LayerNorm",
    "Linear",
    "Module",
    "parameter",
]
