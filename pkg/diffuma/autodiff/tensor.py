from __future__ import annotations

import contextlib
import dataclasses
import logging
from collections.abc import Iterator, Sequence
from contextvars import ContextVar
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np
import numpy.typing as npt

from diffuma.errors import DimensionError, NumericalError
from diffuma.settings import get_settings


if TYPE_CHECKING:
    from diffuma._types import DType, FloatArray, Shape


logger = logging.getLogger(__name__)

dtype_var: ContextVar[DType] = ContextVar(
    "diffuma_dtype",
    default=np.float32,
)
grad_enabled_var: ContextVar[bool] = ContextVar(
    "diffuma_grad_enabled",
    default=True,
)
check_finite_var: ContextVar[bool | None] = ContextVar(
    "diffuma_check_finite",
    default=None,
)


def get_default_dtype() -> DType:
    return dtype_var.get()


def is_grad_enabled() -> bool:
    return grad_enabled_var.get()


def finite_checks_enabled() -> bool:
    if (enabled := check_finite_var.get()) is not None:
        return enabled
    return get_settings().check_finite


@contextlib.contextmanager
def precision(dtype: DType) -> Iterator[None]:
    """Sets the scalar type used for newly created tensors."""
    token = dtype_var.set(dtype)
    try:
        yield
    finally:
        dtype_var.reset(token)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    token = grad_enabled_var.set(False)  # noqa: FBT003
    try:
        yield
    finally:
        grad_enabled_var.reset(token)


@contextlib.contextmanager
def check_finite(
    enabled: bool = True,  # noqa: FBT001, FBT002
) -> Iterator[None]:
    token = check_finite_var.set(enabled)
    try:
        yield
    finally:
        check_finite_var.reset(token)


class Tensor:
    __slots__ = ("_op", "data", "grad", "name", "requires_grad")

    def __init__(
        self,
        data: npt.ArrayLike,
        *,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: DType | None = None,
    ) -> None:
        self.data: FloatArray = np.array(
            data,
            dtype=dtype or get_default_dtype(),
        )
        self.requires_grad = requires_grad
        self.grad: FloatArray | None = None
        self.name = name
        self._op: Function | None = None

    @classmethod
    def _from_op(cls, data: FloatArray, op: Function | None) -> Tensor:
        tensor = cls.__new__(cls)
        tensor.data = data
        tensor.requires_grad = op is not None
        tensor.grad = None
        tensor.name = None
        tensor._op = op  # noqa: SLF001
        return tensor

    @property
    def op(self) -> Function | None:
        return self._op

    @property
    def shape(self) -> Shape:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._op is None

    def item(self) -> float:
        if self.size != 1:
            msg = (
                f"item() needs a single-element tensor, got shape {self.shape}"
            )
            raise DimensionError(msg)
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> dict[Tensor, FloatArray]:
        return backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return (
            f"Tensor(shape={self.shape}, dtype={self.dtype},"
            f" requires_grad={self.requires_grad}{label})"
        )

    # Operator sugar delegates to diffuma.autodiff.ops.
    def __add__(self, other: Tensor) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.add(self, other)

    def __sub__(self, other: Tensor) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.sub(self, other)

    def __mul__(self, other: Tensor) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.mul(self, other)

    def __neg__(self) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.slice_(self, index)

    def reshape(self, *shape: int) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.transpose(self, axes)

    def sum(
        self,
        axis: int | tuple[int, ...] | None = None,
        *,
        keepdims: bool = False,
    ) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.sum_(self, axis=axis, keepdims=keepdims)

    def mean(
        self,
        axis: int | tuple[int, ...] | None = None,
        *,
        keepdims: bool = False,
    ) -> Tensor:
        from diffuma.autodiff import ops  # noqa: PLC0415

        return ops.mean(self, axis=axis, keepdims=keepdims)


class Function:
    """Base class of a recorded operation.

    `forward` receives raw arrays and stores on `self` exactly what
    `backward` needs. `backward` returns one gradient per input, or `None`
    for inputs that are not differentiable.
    """

    differentiable: ClassVar[bool] = True
    inputs: tuple[Tensor, ...] = ()

    def forward(self, *arrays: FloatArray) -> FloatArray:
        raise NotImplementedError

    def backward(self, grad: FloatArray) -> Sequence[FloatArray | None]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        function = cls(**kwargs)
        out = function.forward(*(tensor.data for tensor in inputs))
        if finite_checks_enabled() and not np.all(np.isfinite(out)):
            msg = "Non-finite value produced by forward op"
            logger.error("%s %s", msg, cls.__name__)
            raise NumericalError(msg, name=cls.__name__)

        track = is_grad_enabled() and any(
            tensor.requires_grad for tensor in inputs
        )
        if not track:
            return Tensor._from_op(out, None)  # noqa: SLF001
        function.inputs = inputs
        return Tensor._from_op(out, function)  # noqa: SLF001


@dataclasses.dataclass(frozen=True, slots=True)
class Graph:
    """Topologically ordered view of the tape reachable from `output`."""

    nodes: tuple[Tensor, ...]
    output: Tensor

    @classmethod
    def trace(cls, output: Tensor) -> Graph:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(output, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                order.append(tensor)
                continue
            if id(tensor) in visited or not tensor.requires_grad:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            if tensor.op is not None:
                stack.extend(
                    (parent, False)
                    for parent in reversed(tensor.op.inputs)
                    if id(parent) not in visited
                )
        return cls(nodes=tuple(order), output=output)


def backward(
    output: Tensor,
    graph: Graph | None = None,
) -> dict[Tensor, FloatArray]:
    """Reverse-mode pass; accumulates into `grad` of every reachable leaf.

    Calling it twice without `zero_grad` adds the gradients twice.
    """
    if output.size != 1:
        msg = f"backward() needs a scalar output, got shape {output.shape}"
        raise DimensionError(msg)
    if not output.requires_grad:
        return {}

    graph = graph or Graph.trace(output)
    pending: dict[int, FloatArray] = {id(output): np.ones_like(output.data)}
    result: dict[Tensor, FloatArray] = {}
    for node in reversed(graph.nodes):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node.op is None:
            result[node] = grad
            continue
        for parent, parent_grad in zip(
            node.op.inputs,
            node.op.backward(grad),
            strict=True,
        ):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in pending:
                pending[key] = pending[key] + parent_grad
            else:
                pending[key] = parent_grad

    for leaf, grad in result.items():
        grad_ = np.asarray(grad, dtype=leaf.data.dtype).reshape(leaf.shape)
        leaf.grad = grad_.copy() if leaf.grad is None else leaf.grad + grad_
    return result
