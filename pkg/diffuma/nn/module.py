from __future__ import annotations

from collections.abc import Iterator, Mapping
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from diffuma.autodiff import Tensor
from diffuma.errors import CheckpointError


if TYPE_CHECKING:
    from diffuma._types import FloatArray


def parameter(data: npt.ArrayLike, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


class Module:
    """Parameter container; parameters are discovered from attributes.

    Attribute insertion order fixes parameter order, which fixes the
    checkpoint layout and the optimizer state layout.
    """

    def named_parameters(
        self,
        prefix: str = "",
    ) -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield f"{prefix}{name}", value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")
            elif isinstance(value, list | tuple):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(
                            f"{prefix}{name}.{index}.",
                        )

    def parameters(self) -> list[Tensor]:
        return [tensor for _, tensor in self.named_parameters()]

    def zero_grad(self) -> None:
        for tensor in self.parameters():
            tensor.zero_grad()

    def state_dict(self) -> dict[str, FloatArray]:
        return {
            name: tensor.data.copy()
            for name, tensor in self.named_parameters()
        }

    def load_state_dict(self, state: Mapping[str, FloatArray]) -> None:
        own = dict(self.named_parameters())
        if missing := sorted(own.keys() - state.keys()):
            msg = f"Missing parameters: {missing}"
            raise CheckpointError(msg)
        if unexpected := sorted(state.keys() - own.keys()):
            msg = f"Unexpected parameters: {unexpected}"
            raise CheckpointError(msg)
        for name, tensor in own.items():
            value = np.asarray(state[name])
            if value.shape != tensor.shape:
                msg = (
                    f"Parameter {name!r} has shape {tensor.shape},"
                    f" stored value has {value.shape}"
                )
                raise CheckpointError(msg)
            tensor.data = value.astype(tensor.dtype, copy=True)
