"""Minimal numpy autodiff engine with numba-accelerated conv kernels."""

from . import backend
from .modules import Conv2d, Linear, Module
from .optim import Adam
from .tensor import (
    Parameter,
    Tensor,
    absolute,
    add,
    avgpool2x,
    clip,
    concat,
    conv2d,
    div,
    exp,
    getitem,
    leaky_relu,
    log,
    matmul,
    mul,
    no_grad,
    power,
    relu,
    reshape,
    sigmoid,
    sqrt,
    sub,
    tanh,
    tmean,
    transpose,
    tsum,
    upsample2x,
)

__all__ = [
    "Adam", "Conv2d", "Linear", "Module", "Parameter", "Tensor", "absolute",
    "add", "avgpool2x", "backend", "clip", "concat", "conv2d", "div", "exp",
    "getitem", "leaky_relu", "log", "matmul", "mul", "no_grad", "power",
    "relu", "reshape", "sigmoid", "sqrt", "sub", "tanh", "tmean", "transpose",
    "tsum", "upsample2x",
]
