"""Primitive differentiable operations.

Each op computes eagerly with numpy and attaches a vjp that is itself built
from these ops, so gradients of gradients come out correctly. Supported
broadcasting is deliberately narrow: equal shapes, a trailing-dim vector
(k,) against (n, k), a column (n, 1) against (n, k), or a scalar.

log, sqrt and reciprocal clamp their inputs at ``CLAMP_MIN`` and exp clips
its argument to ``EXP_MAX`` so finite inputs never produce NaN or Inf.
"""

from __future__ import annotations

import numpy as np

from .tensor import ShapeMismatch, Tensor, const, gradients, make_node

CLAMP_MIN = 1e-12
EXP_MAX = 80.0


def _broadcast_ok(sa, sb):
    """Whether shape sb may broadcast against sa under our narrow rules."""
    if sa == sb:
        return True
    if len(sb) == 0 or sb == (1,):
        return True
    if len(sa) == 2 and sb == (sa[1],):
        return True
    if len(sa) == 2 and sb == (sa[0], 1):
        return True
    return False


def _pair_shapes(a, b, opname):
    if _broadcast_ok(a.shape, b.shape) or _broadcast_ok(b.shape, a.shape):
        return
    raise ShapeMismatch(f"{opname}: shapes {a.shape} and {b.shape} are incompatible")


def _reduce_like(g, shape):
    """Reduce a broadcast gradient back to the original operand shape."""
    if g.shape == shape:
        return g
    if shape == () or shape == (1,):
        return reshape(tsum(g), shape)
    if len(g.shape) == 2 and shape == (g.shape[1],):
        return tsum(g, axis=0)
    if len(g.shape) == 2 and shape == (g.shape[0], 1):
        return reshape(tsum(g, axis=1), shape)
    raise ShapeMismatch(f"cannot reduce gradient {g.shape} to {shape}")


# --- arithmetic ---

def add(a, b):
    _pair_shapes(a, b, "add")
    data = a.data + b.data

    def vjp(out):
        def run(g, needed):
            ga = _reduce_like(g, a.shape) if needed[0] else None
            gb = _reduce_like(g, b.shape) if needed[1] else None
            return ga, gb
        return run

    return make_node("add", (a, b), data, vjp, lambda vals: vals[0] + vals[1])


def sub(a, b):
    return add(a, scale(b, -1.0))


def mul(a, b):
    _pair_shapes(a, b, "mul")
    data = a.data * b.data

    def vjp(out):
        def run(g, needed):
            ga = _reduce_like(mul(g, b), a.shape) if needed[0] else None
            gb = _reduce_like(mul(g, a), b.shape) if needed[1] else None
            return ga, gb
        return run

    return make_node("mul", (a, b), data, vjp, lambda vals: vals[0] * vals[1])


def scale(a, k):
    k = float(k)

    def vjp(out):
        def run(g, needed):
            return (scale(g, k),)
        return run

    return make_node("scale", (a,), a.data * k, vjp, lambda vals: vals[0] * k)


def shift(a, k):
    """Add a python scalar constant."""
    k = float(k)

    def vjp(out):
        def run(g, needed):
            return (g,)
        return run

    return make_node("shift", (a,), a.data + k, vjp, lambda vals: vals[0] + k)


def _mm(a, b, mode):
    """Matrix product with transposes folded in: mode 'nn', 'tn' or 'nt'.

    Keeping the transposed operand as a strided view avoids a copy per
    backward matmul; the vjp family is closed under these three modes.
    """
    av = a.data.T if mode[0] == "t" else a.data
    bv = b.data.T if mode[1] == "t" else b.data
    if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise ShapeMismatch(f"matmul: shapes {a.shape} and {b.shape} are "
                            f"incompatible (mode {mode})")

    def vjp(out):
        def run(g, needed):
            if mode == "nn":
                ga = _mm(g, b, "nt") if needed[0] else None
                gb = _mm(a, g, "tn") if needed[1] else None
            elif mode == "tn":  # out = a.T @ b
                ga = _mm(b, g, "nt") if needed[0] else None
                gb = _mm(a, g, "nn") if needed[1] else None
            else:  # "nt": out = a @ b.T
                ga = _mm(g, b, "nn") if needed[0] else None
                gb = _mm(g, a, "tn") if needed[1] else None
            return ga, gb
        return run

    def recompute(vals):
        x = vals[0].T if mode[0] == "t" else vals[0]
        y = vals[1].T if mode[1] == "t" else vals[1]
        return x @ y

    return make_node(f"matmul_{mode}", (a, b), av @ bv, vjp, recompute)


def matmul(a, b):
    return _mm(a, b, "nn")


def transpose(a):
    if a.data.ndim != 2:
        raise ShapeMismatch(f"transpose expects a matrix, got shape {a.shape}")

    def vjp(out):
        def run(g, needed):
            return (transpose(g),)
        return run

    return make_node("transpose", (a,), a.data.T.copy(), vjp, lambda vals: vals[0].T.copy())


def reshape(a, shape):
    shape = tuple(shape)
    data = a.data.reshape(shape)
    orig = a.shape

    def vjp(out):
        def run(g, needed):
            return (reshape(g, orig),)
        return run

    return make_node("reshape", (a,), data, vjp, lambda vals: vals[0].reshape(shape))


# --- reductions ---

def tsum(a, axis=None):
    if axis not in (None, 0, 1):
        raise ValueError("tsum supports axis None, 0 or 1")
    data = a.data.sum(axis=axis)
    shape = a.shape

    def vjp(out):
        def run(g, needed):
            zeros = const(np.zeros(shape, dtype=g.dtype))
            if axis is None:
                return (add(zeros, reshape(g, ())),)
            if axis == 0:
                return (add(zeros, g),)
            return (add(zeros, reshape(g, (shape[0], 1))),)
        return run

    return make_node("sum", (a,), data, vjp, lambda vals: vals[0].sum(axis=axis))


def tmean(a, axis=None):
    n = a.size if axis is None else a.shape[axis]
    return scale(tsum(a, axis=axis), 1.0 / n)


# --- elementwise nonlinearities ---

def _unary(a, name, fn, deriv_builder):
    data = fn(a.data)

    def vjp(out):
        def run(g, needed):
            return (deriv_builder(g, out),)
        return run

    return make_node(name, (a,), data, vjp, lambda vals: fn(vals[0]))


def relu(a):
    mask = (a.data > 0).astype(a.dtype)
    data = a.data * mask

    def vjp(out):
        mk = const(mask)

        def run(g, needed):
            return (mul(g, mk),)
        return run

    return make_node("relu", (a,), data, vjp, lambda vals: np.maximum(vals[0], 0))


def sigmoid(a):
    def fn(x):
        return 1.0 / (1.0 + np.exp(-np.clip(x, -EXP_MAX, EXP_MAX)))
    # d/dx = y (1 - y), expressed on the output node so it stays differentiable
    return _unary(a, "sigmoid", fn,
                  lambda g, y: mul(g, mul(y, shift(scale(y, -1.0), 1.0))))


def tanh(a):
    return _unary(a, "tanh", np.tanh,
                  lambda g, y: mul(g, shift(scale(square(y), -1.0), 1.0)))


def exp(a):
    clipped = (np.abs(a.data) <= EXP_MAX)

    def fn(x):
        return np.exp(np.clip(x, -EXP_MAX, EXP_MAX))

    def deriv(g, y):
        gy = mul(g, y)
        if clipped.all():
            return gy
        return mul(gy, const(clipped.astype(g.dtype)))

    return _unary(a, "exp", fn, deriv)


def log(a):
    inside = (a.data >= CLAMP_MIN)

    def fn(x):
        return np.log(np.maximum(x, CLAMP_MIN))

    def deriv(g, y):
        gx = mul(g, reciprocal_of(a))
        if inside.all():
            return gx
        return mul(gx, const(inside.astype(g.dtype)))

    return _unary(a, "log", fn, deriv)


def square(a):
    return _unary(a, "square", np.square,
                  lambda g, y: mul(g, scale(a, 2.0)))


def sqrt(a):
    inside = (a.data >= CLAMP_MIN)

    def fn(x):
        return np.sqrt(np.maximum(x, CLAMP_MIN))

    def deriv(g, y):
        gx = mul(g, scale(reciprocal_of(y), 0.5))
        if inside.all():
            return gx
        return mul(gx, const(inside.astype(g.dtype)))

    return _unary(a, "sqrt", fn, deriv)


def reciprocal_of(a):
    """1 / max(a, CLAMP_MIN); intended for strictly positive operands."""
    inside = (a.data >= CLAMP_MIN)

    def fn(x):
        return 1.0 / np.maximum(x, CLAMP_MIN)

    def deriv(g, y):
        gx = scale(mul(g, square(y)), -1.0)
        if inside.all():
            return gx
        return mul(gx, const(inside.astype(g.dtype)))

    return _unary(a, "reciprocal", fn, deriv)


# --- structural ops ---

def concat(tensors, axis=0):
    tensors = list(tensors)
    if not tensors:
        raise ValueError("concat needs at least one tensor")
    ndim = tensors[0].data.ndim
    if axis >= ndim or any(t.data.ndim != ndim for t in tensors):
        raise ShapeMismatch("concat: inconsistent ranks")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]

    def vjp(out):
        def run(g, needed):
            grads, start = [], 0
            for size, need in zip(sizes, needed):
                grads.append(slice_axis(g, axis, start, start + size) if need else None)
                start += size
            return grads
        return run

    return make_node("concat", tuple(tensors), data, vjp,
                     lambda vals: np.concatenate(vals, axis=axis))


def _slice_idx(a, idx):
    shape = a.shape

    def vjp(out):
        def run(g, needed):
            return (_scatter_idx(g, shape, idx),)
        return run

    return make_node("slice", (a,), a.data[idx].copy(), vjp, lambda vals: vals[0][idx].copy())


def _scatter_idx(g, shape, idx):
    def compute(val):
        full = np.zeros(shape, dtype=val.dtype)
        full[idx] = val
        return full

    def vjp(out):
        def run(gg, needed):
            return (_slice_idx(gg, idx),)
        return run

    return make_node("scatter", (g,), compute(g.data), vjp, lambda vals: compute(vals[0]))


def slice_axis(a, axis, start, stop):
    if axis >= a.data.ndim:
        raise ShapeMismatch(f"slice_axis: axis {axis} out of range for shape {a.shape}")
    idx = tuple(slice(start, stop) if d == axis else slice(None) for d in range(a.data.ndim))
    return _slice_idx(a, idx)


def softmax(a, axis=1):
    """Row-wise softmax (axis 1 for matrices, the only axis for vectors)."""
    if a.data.ndim == 1:
        axis = None
    elif axis != 1:
        raise ShapeMismatch("softmax supports axis 1 for matrices")

    def compute(val):
        s = val - val.max(axis=axis if axis is not None else 0,
                          keepdims=axis is not None)
        ev = np.exp(s)
        return ev / ev.sum(axis=axis if axis is not None else 0,
                           keepdims=axis is not None)

    def vjp(out):
        def run(g, needed):
            gy = mul(g, out)
            if out.data.ndim == 1:
                s = reshape(tsum(gy), ())
            else:
                s = reshape(tsum(gy, axis=1), (out.shape[0], 1))
            return (mul(out, sub(g, s)),)
        return run

    return make_node("softmax", (a,), compute(a.data), vjp, compute)


# --- composites used throughout the models ---

def norm_rows(a):
    """Euclidean norm of each row of a matrix, shape (n,)."""
    return sqrt(tsum(square(a), axis=1))


def gaussian_sample(mu, log_var, stream):
    """Reparameterized draw mu + exp(log_var / 2) * eps with eps ~ N(0, I).

    eps comes from the passed stream and is recorded as a constant, so tape
    replay reproduces the draw bit-identically.
    """
    eps = const(stream.standard_normal(mu.shape).astype(mu.dtype, copy=False))
    return add(mu, mul(exp(scale(log_var, 0.5)), eps))


def one_hot(labels, n_classes, dtype=np.float64):
    """Constant one-hot matrix for integer labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels outside [0, {n_classes})")
    m = np.zeros((labels.shape[0], n_classes), dtype=dtype)
    m[np.arange(labels.shape[0]), labels] = 1.0
    return const(m)
