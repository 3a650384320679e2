"""Dense-tensor reverse-mode autodiff with a replayable tape.

Every operation builds a small graph node; gradients are themselves built
out of graph operations, so a gradient tensor can re-enter a loss and be
differentiated again (backward-of-backward). A Tape, when active, records
nodes in execution order and can replay the forward pass with new input
bindings.
"""

from __future__ import annotations

import threading

import numpy as np

DEFAULT_DTYPE = np.float64


class ShapeMismatch(ValueError):
    """Raised when operand shapes are incompatible; carries the node id when taped."""

    def __init__(self, message, node_id=None):
        if node_id is not None:
            message = f"{message} (node {node_id})"
        super().__init__(message)
        self.node_id = node_id


class Tensor:
    """A dense array plus the bookkeeping needed for reverse-mode differentiation."""

    __slots__ = ("data", "requires_grad", "name", "op", "parents", "_vjp",
                 "_recompute", "tape_id")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data)
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.op = "leaf"
        self.parents = ()
        self._vjp = None
        self._recompute = None
        self.tape_id = None
        tape = active_tape()
        if tape is not None:
            tape.record(self)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(-1)[0])

    def detach(self):
        """Return a constant leaf sharing this tensor's values."""
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(op={self.op!r}, shape={self.shape}{grad})"

    # Convenience arithmetic; the full op set lives in diffcore.ops.
    def __add__(self, other):
        from . import ops
        return ops.add(self, _as_tensor(other, self.dtype))

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, _as_tensor(other, self.dtype))

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, _as_tensor(other, self.dtype))

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def sum(self, axis=None):
        from . import ops
        return ops.tsum(self, axis=axis)

    def mean(self, axis=None):
        from . import ops
        return ops.tmean(self, axis=axis)


def _as_tensor(value, dtype):
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def tensor(values, requires_grad=False, dtype=None, name=None):
    """Create a leaf tensor.

    Floating arrays keep their dtype; anything else becomes float64 unless
    a dtype is given.
    """
    if dtype is None:
        arr = np.asarray(values)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(DEFAULT_DTYPE)
    else:
        arr = np.asarray(values, dtype=dtype)
    return Tensor(arr, requires_grad=requires_grad, name=name)


def const(values, dtype=None, name=None):
    """Create a constant (non-differentiable) leaf."""
    return tensor(values, requires_grad=False, dtype=dtype, name=name)


def make_node(op_name, parents, data, vjp_builder=None, recompute=None):
    """Internal: wrap an op result in a graph node.

    vjp_builder(out) must return a function grad -> list of per-parent grad
    tensors (or None); the returned expressions must themselves be built from
    diffcore ops so that gradients stay differentiable.
    """
    out = Tensor(data)
    out.op = op_name
    out.parents = tuple(parents)
    out.requires_grad = any(p.requires_grad for p in out.parents)
    if vjp_builder is not None:
        out._vjp = vjp_builder(out)
    out._recompute = recompute
    return out


_STATE = threading.local()


def active_tape():
    stack = getattr(_STATE, "tapes", None)
    return stack[-1] if stack else None


class Tape:
    """Ordered record of executed nodes, supporting replay and gradient queries.

    A tape and its tensors belong to one thread; independent tapes may run
    concurrently.
    """

    def __init__(self):
        self.nodes = []
        self.outputs = {}

    def __enter__(self):
        stack = getattr(_STATE, "tapes", None)
        if stack is None:
            stack = _STATE.tapes = []
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _STATE.tapes.pop()
        return False

    def record(self, t):
        t.tape_id = len(self.nodes)
        self.nodes.append(t)

    def mark_output(self, name, t):
        self.outputs[name] = t

    def parameters(self):
        """Leaf tensors recorded on this tape that require gradients."""
        return [t for t in self.nodes if t.requires_grad and not t.parents]

    def replay(self, inputs=None):
        """Re-run the recorded forward pass.

        inputs maps leaf names to replacement arrays; unbound leaves reuse
        their recorded values. Returns {name: array} for marked outputs.
        Replaying with the recorded values reproduces the recorded outputs
        bit-identically (stochastic draws were saved as constants).
        """
        inputs = dict(inputs or {})
        values = {}
        for t in self.nodes:
            if not t.parents:
                if t.name is not None and t.name in inputs:
                    val = np.asarray(inputs.pop(t.name), dtype=t.dtype)
                    if val.shape != t.shape:
                        raise ShapeMismatch(
                            f"input {t.name!r} has shape {val.shape}, recorded {t.shape}",
                            node_id=t.tape_id)
                else:
                    val = t.data
            else:
                val = t._recompute([values[id(p)] for p in t.parents])
            values[id(t)] = val
        if inputs:
            raise KeyError(f"unknown input names: {sorted(inputs)}")
        return {name: values[id(t)] for name, t in self.outputs.items()}

    def gradients(self, output, wrt=None):
        """Gradients of a scalar output for every tape parameter (or `wrt`)."""
        targets = list(wrt) if wrt is not None else self.parameters()
        return gradients(output, targets)


def _check_scalar(output):
    if output.size != 1:
        raise ValueError(f"backward needs a scalar output, got shape {output.shape}")


def _topo_from(output):
    """Ancestors of `output`, children before parents when reversed."""
    order, seen, stack = [], set(), [(output, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order  # parents-first; reverse for backward sweep


def gradients(output, wrt):
    """Reverse-mode gradients of a scalar `output` with respect to `wrt` tensors.

    The returned tensors are graph nodes, so they can be combined into a new
    scalar and differentiated again. Tensors in `wrt` that do not influence
    the output get zero gradients.
    """
    from . import ops
    _check_scalar(output)
    wrt = list(wrt)
    order = _topo_from(output)
    wanted = {id(t) for t in wrt}
    # A node's gradient is worth computing only if it is requested or can
    # flow onward (through parent edges) to a requested tensor.
    needs = {}
    for node in order:
        needs[id(node)] = id(node) in wanted or any(needs[id(p)] for p in node.parents)
    grads = {id(output): const(np.ones(output.shape, dtype=output.dtype))}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None or node._vjp is None:
            continue
        needed = tuple(needs[id(p)] for p in node.parents)
        if not any(needed):
            continue
        for p, pg in zip(node.parents, node._vjp(g, needed)):
            if pg is None:
                continue
            existing = grads.get(id(p))
            grads[id(p)] = pg if existing is None else ops.add(existing, pg)
    out = []
    for t in wrt:
        g = grads.get(id(t))
        if g is None:
            g = const(np.zeros(t.shape, dtype=t.dtype))
        out.append(g)
    return out


def forward(tape, inputs=None):
    """Replay a tape's forward pass with new input bindings."""
    return tape.replay(inputs)


def backward(tape, output, wrt=None):
    """Gradients of a scalar recorded on `tape` for its parameters (or `wrt`)."""
    return tape.gradients(output, wrt)


def input_gradient(output, wrt_input):
    """Gradient of a scalar with respect to one input tensor.

    The result is itself differentiable: it may enter a later loss whose
    backward pass produces correct parameter gradients.
    """
    _check_scalar(output)
    reachable = {id(t) for t in _topo_from(output)}
    if id(wrt_input) not in reachable:
        raise ValueError("wrt_input does not feed the given output")
    return gradients(output, [wrt_input])[0]
