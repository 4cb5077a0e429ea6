from __future__ import annotations

import numpy as np

from diffuma.autodiff import add, mul, silu
from diffuma.errors import DimensionError
from diffuma.mamba.sequences import LatentSequence
from diffuma.mamba.ssm import Direction, SsmBranch
from diffuma.nn import LayerNorm, Linear, Module


class BiMambaBlock(Module):
    """Forward and backward scan branches fused by addition, then gated.

    `Z_l = (ssm_fwd(x) + ssm_bwd(x)) * silu(W_g z + b_g) [+ z]` with
    `x = LayerNorm(z)`; the gate reads the raw block input.
    """

    def __init__(  # noqa: PLR0913
        self,
        dim: int,
        state: int,
        kernel_size: int,
        rng: np.random.Generator,
        *,
        residual: bool = True,
    ) -> None:
        self.norm = LayerNorm(dim)
        self.forward_branch = SsmBranch(dim, state, kernel_size, rng)
        self.backward_branch = SsmBranch(dim, state, kernel_size, rng)
        self.gate = Linear(dim, dim, rng)
        self.residual = residual
        self.dim = dim

    def __call__(self, z: LatentSequence) -> LatentSequence:
        if z.dim != self.dim:
            msg = f"Block expects feature size {self.dim}, got {z.dim}"
            raise DimensionError(msg)
        index = z.layer_index + 1
        if z.steps == 0:
            return LatentSequence(z.tensor, layer_index=index)
        x = self.norm(z.tensor)
        fused = add(
            self.forward_branch(x, Direction.forward),
            self.backward_branch(x, Direction.backward),
        )
        out = mul(fused, silu(self.gate(z.tensor)))
        if self.residual:
            out = add(out, z.tensor)
        return LatentSequence(out, layer_index=index)
