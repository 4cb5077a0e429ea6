from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt


Shape: TypeAlias = tuple[int, ...]
FloatArray: TypeAlias = npt.NDArray[np.floating[Any]]
IntArray: TypeAlias = npt.NDArray[np.integer[Any]]
BoolArray: TypeAlias = npt.NDArray[np.bool_]
DType: TypeAlias = type[np.float32] | type[np.float64]
