"""Minimal reverse-mode autodiff: tensors, tape, primitives, Adam, RNG streams."""

from .adam import AdamState, adam_init, adam_step
from .ops import (concat, exp, gaussian_sample, log, matmul, mul, norm_rows,
                  one_hot, relu, reshape, scale, shift, sigmoid, slice_axis,
                  softmax, sqrt, square, sub, tanh, tmean, transpose, tsum, add)
from .rng import stream
from .tensor import (ShapeMismatch, Tape, Tensor, backward, const, forward,
                     gradients, input_gradient, tensor)

__all__ = [
    "AdamState", "adam_init", "adam_step",
    "ShapeMismatch", "Tape", "Tensor",
    "add", "backward", "concat", "const", "exp", "forward", "gaussian_sample",
    "gradients", "input_gradient", "log", "matmul", "mul", "norm_rows",
    "one_hot", "relu", "reshape", "scale", "shift", "sigmoid", "slice_axis",
    "softmax", "sqrt", "square", "stream", "sub", "tanh", "tensor", "tmean",
    "transpose", "tsum",
]
