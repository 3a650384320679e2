"""Deep classifier with residual shortcut projections every two layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import diffcore as dc


@dataclass
class DnnConfig:
    epochs: int = 300
    batch_size: int = 128
    lr: float = 1e-4
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999


@dataclass
class ShortcutDnn:
    """ReLU MLP where, when enabled, every pair of hidden layers computes
    relu(W2 relu(W1 x) + Ws x) with a linear projection Ws matching dims.
    An odd trailing layer stays plain; the final layer emits linear logits.
    """

    input_dim: int
    widths: tuple
    n_classes: int
    shortcut: bool
    params: dict = field(default_factory=dict)

    @property
    def depth(self):
        return len(self.widths)

    def pair_layout(self):
        """Indices of (first, second) hidden layers grouped into pairs."""
        pairs = []
        i = 0
        while i + 1 < self.depth:
            pairs.append((i, i + 1))
            i += 2
        tail = i if i < self.depth else None
        return pairs, tail


def build_dnn(input_dim, widths, n_classes, shortcut, rng, dtype=np.float64):
    model = ShortcutDnn(input_dim, tuple(widths), n_classes, bool(shortcut))
    dims = [input_dim, *widths, n_classes]
    for i in range(len(dims) - 1):
        scale = np.sqrt(2.0 / dims[i])
        w = (scale * rng.standard_normal((dims[i], dims[i + 1]))).astype(dtype)
        model.params[f"w{i}"] = dc.tensor(w, requires_grad=True, dtype=dtype)
        model.params[f"b{i}"] = dc.tensor(np.zeros(dims[i + 1], dtype=dtype),
                                          requires_grad=True, dtype=dtype)
    if shortcut:
        pairs, _ = model.pair_layout()
        for a, b in pairs:
            in_dim = dims[a]          # input of the pair
            out_dim = dims[b + 1]     # output of the pair
            scale = np.sqrt(1.0 / in_dim)
            ws = (scale * rng.standard_normal((in_dim, out_dim))).astype(dtype)
            model.params[f"s{a}"] = dc.tensor(ws, requires_grad=True, dtype=dtype)
    return model


def _linear(model, i, x):
    return dc.add(dc.matmul(x, model.params[f"w{i}"]), model.params[f"b{i}"])


def dnn_forward(model, rows):
    """Logits for a batch; accepts arrays or tensors."""
    x = rows if isinstance(rows, dc.Tensor) else dc.const(np.asarray(rows))
    if x.shape[1] != model.input_dim:
        raise dc.ShapeMismatch(f"input dim {x.shape[1]} != {model.input_dim}")
    pairs, tail = model.pair_layout()
    h = x
    for a, b in pairs:
        f = dc.matmul(dc.relu(_linear(model, a, h)), model.params[f"w{b}"])
        f = dc.add(f, model.params[f"b{b}"])
        if model.shortcut:
            f = dc.add(f, dc.matmul(h, model.params[f"s{a}"]))
        h = dc.relu(f)
    if tail is not None:
        h = dc.relu(_linear(model, tail, h))
    return _linear(model, model.depth, h)


def cross_entropy(logits, labels):
    """Mean softmax cross-entropy over the batch."""
    probs = dc.softmax(logits, axis=1)
    onehot = dc.one_hot(labels, logits.shape[1], logits.dtype)
    picked = dc.tsum(dc.mul(onehot, dc.log(probs)), axis=1)
    return dc.scale(dc.tmean(picked), -1.0)


def dnn_predict(model, rows):
    return np.argmax(dnn_forward(model, rows).data, axis=1)


def dnn_accuracy(model, rows, labels):
    return float(np.mean(dnn_predict(model, rows) == np.asarray(labels)))


def dnn_confidence(model, rows):
    """Softmax class probabilities."""
    return dc.softmax(dnn_forward(model, rows), axis=1).data


def dnn_train(model, x, y, config):
    """Adam on softmax cross-entropy over normalized features.

    Returns the per-epoch (loss, train accuracy) trace; deterministic given
    config.seed. A non-finite loss aborts with the epoch index.
    """
    from ..genmod.train import TrainingDiverged

    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    shuffle = dc.stream(config.seed, "dnn", "shuffle")
    state = dc.adam_init(model.params, lr=config.lr, beta1=config.beta1,
                         beta2=config.beta2)
    names = list(model.params)
    wrts = [model.params[k] for k in names]
    trace = []
    for epoch in range(config.epochs):
        order = shuffle.permutation(x.shape[0])
        epoch_loss = []
        for start in range(0, x.shape[0], config.batch_size):
            idx = order[start:start + config.batch_size]
            loss = cross_entropy(dnn_forward(model, x[idx]), y[idx])
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(epoch, "cross-entropy loss")
            grads = dc.gradients(loss, wrts)
            dc.adam_step(state, model.params,
                         {k: g.data for k, g in zip(names, grads)})
            epoch_loss.append(value)
        trace.append({"epoch": epoch, "loss": float(np.mean(epoch_loss)),
                      "accuracy": dnn_accuracy(model, x, y)})
    return trace
