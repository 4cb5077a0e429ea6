from diffuma.autodiff.conv import conv1d, conv2d, conv_transpose2d
from diffuma.autodiff.gradcheck import check_gradients
from diffuma.autodiff.ops import (
    abs_,
    add,
    concat,
    exp,
    expand,
    flip,
    gelu,
    layer_norm,
    matmul,
    mean,
    mul,
    neg,
    reshape,
    scale,
    shift,
    sigmoid,
    silu,
    slice_,
    softmax,
    softplus,
    square,
    stack,
    sub,
    sum_,
    transpose,
)
from diffuma.autodiff.tensor import (
    Function,
    Graph,
    Tensor,
    backward,
    check_finite,
    get_default_dtype,
    no_grad,
    precision,
)


__all__ = [
    "Function",
    "Graph",
    "Tensor",
    "abs_",
    "add",
    "backward",
    "check_finite",
    "check_gradients",
    "concat",
    "conv1d",
    "conv2d",
    "conv_transpose2d",
    "exp",
    "expand",
    "flip",
    "gelu",
    "get_default_dtype",
    "layer_norm",
    "matmul",
    "mean",
    "mul",
    "neg",
    "no_grad",
    "precision",
    "reshape",
    "scale",
    "shift",
    "sigmoid",
    "silu",
    "slice_",
    "softmax",
    "softplus",
    "square",
    "stack",
    "sub",
    "sum_",
    "transpose",
]
