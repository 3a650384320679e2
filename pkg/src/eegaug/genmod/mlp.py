"""Plain fully connected nets used by every generator, critic and encoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..diffcore import add, matmul, relu, tensor


@dataclass(frozen=True)
class MlpSpec:
    """Widths from input to output; hidden activations are ReLU, output linear."""

    widths: tuple
    init: str = "he"

    def __post_init__(self):
        if len(self.widths) < 3:
            raise ValueError("need at least one hidden layer")
        if any(w <= 0 for w in self.widths):
            raise ValueError("layer widths must be positive")

    @property
    def in_dim(self):
        return self.widths[0]

    @property
    def out_dim(self):
        return self.widths[-1]

    def layer_names(self, prefix):
        names = []
        for i in range(len(self.widths) - 1):
            names += [f"{prefix}w{i}", f"{prefix}b{i}"]
        return names


def init_mlp(spec: MlpSpec, rng, prefix="", dtype=np.float32):
    """He-scaled weights, zero biases, as named requires-grad tensors."""
    params = {}
    for i in range(len(spec.widths) - 1):
        fan_in, fan_out = spec.widths[i], spec.widths[i + 1]
        scale = np.sqrt(2.0 / fan_in)
        w = (scale * rng.standard_normal((fan_in, fan_out))).astype(dtype)
        params[f"{prefix}w{i}"] = tensor(w, requires_grad=True, dtype=dtype)
        params[f"{prefix}b{i}"] = tensor(np.zeros(fan_out, dtype=dtype),
                                         requires_grad=True, dtype=dtype)
    return params


def mlp_forward(spec: MlpSpec, params, x, prefix=""):
    """Forward pass; x is a Tensor of shape (batch, in_dim)."""
    h = x
    last = len(spec.widths) - 2
    for i in range(len(spec.widths) - 1):
        h = add(matmul(h, params[f"{prefix}w{i}"]), params[f"{prefix}b{i}"])
        if i != last:
            h = relu(h)
    return h
