"""Adam optimizer over named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def adam_init(params, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
    """Fresh state with zero moments shaped like each parameter."""
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
    for name, p in params.items():
        state.first_moment[name] = np.zeros_like(p.data)
        state.second_moment[name] = np.zeros_like(p.data)
    return state


def adam_step(state, params, grads):
    """One bias-corrected Adam update, applied in place to params.

    grads maps parameter names to arrays; a non-finite gradient aborts with
    the offending parameter named.
    """
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = np.asarray(grads[name])
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape "
                             f"{p.data.shape} for {name!r}")
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= (state.lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)).astype(
            p.data.dtype, copy=False)
    return params
