"""One-vs-rest linear SVM trained by dual coordinate descent.

The binary subproblem is the L1-hinge SVM

    min_w 0.5 ||w||^2 + C sum_i max(0, 1 - y_i w.x_i)

solved in the dual with per-coordinate Newton steps; the bias is an
augmented constant feature. The regularization constant is picked from a
grid by validation accuracy on a held-out stratified split, then the chosen
model is refit on the full training set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..diffcore import stream as make_stream

DEFAULT_C_GRID = tuple(2.0 ** k for k in range(-10, 11))


@dataclass
class SvmModel:
    weights: np.ndarray        # (n_classes, dim)
    bias: np.ndarray           # (n_classes,)
    c: float
    classes: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.classes is None:
            self.classes = np.arange(self.weights.shape[0])

    @property
    def n_classes(self):
        return self.weights.shape[0]

    def decision(self, rows):
        rows = np.asarray(rows, dtype=np.float64)
        return rows @ self.weights.T + self.bias

    def predict(self, rows):
        return self.classes[np.argmax(self.decision(rows), axis=1)]

    def accuracy(self, rows, labels):
        return float(np.mean(self.predict(rows) == np.asarray(labels)))


def _fit_binary(x, y_signed, c, rng, max_epochs=1000, tol=1e-6):
    """Dual coordinate descent for one binary hinge SVM; returns (w, b)."""
    n, d = x.shape
    xa = np.concatenate([x, np.ones((n, 1))], axis=1)  # bias as constant feature
    sq = np.einsum("ij,ij->i", xa, xa)
    alpha = np.zeros(n)
    w = np.zeros(d + 1)
    for _ in range(max_epochs):
        max_pg = 0.0
        for i in rng.permutation(n):
            g = y_signed[i] * (w @ xa[i]) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == c:
                pg = max(g, 0.0)
            else:
                pg = g
            max_pg = max(max_pg, abs(pg))
            if pg != 0.0:
                new = min(max(alpha[i] - g / sq[i], 0.0), c)
                if new != alpha[i]:
                    w += (new - alpha[i]) * y_signed[i] * xa[i]
                    alpha[i] = new
        if max_pg < tol:
            break
    return w[:-1], w[-1], alpha


def _stratified_split(labels, frac, rng):
    """Index split keeping class proportions; returns (train_idx, val_idx)."""
    labels = np.asarray(labels)
    train, val = [], []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        cut = max(1, int(round(frac * idx.size)))
        if cut == idx.size:
            cut = idx.size - 1 if idx.size > 1 else idx.size
        train.append(idx[:cut])
        val.append(idx[cut:])
    return np.concatenate(train), np.concatenate(val)


def _fit_ovr(x, y, classes, c, rng):
    weights = np.zeros((classes.size, x.shape[1]))
    bias = np.zeros(classes.size)
    for k, cls in enumerate(classes):
        y_signed = np.where(y == cls, 1.0, -1.0)
        w, b, _ = _fit_binary(x, y_signed, c, rng)
        weights[k] = w
        bias[k] = b
    return SvmModel(weights, bias, c, classes=classes)


def svm_train(x, y, c_grid=None, seed=0, val_frac=0.2):
    """Train a one-vs-rest linear SVM, selecting C by inner validation.

    With a single-element grid the split is skipped. Features are expected
    to be normalized by the caller. Deterministic given the seed.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training set must contain at least 2 classes")
    grid = sorted(c_grid) if c_grid else sorted(DEFAULT_C_GRID)

    best_c = grid[0]
    if len(grid) > 1:
        rng = make_stream(seed, "svm-select")
        tr, va = _stratified_split(y, 1.0 - val_frac, rng)
        best_acc = -1.0
        for c in grid:
            model = _fit_ovr(x[tr], y[tr], classes, c, make_stream(seed, "svm-fit", c))
            acc = model.accuracy(x[va], y[va])
            if acc > best_acc + 1e-12:
                best_acc, best_c = acc, c
    return _fit_ovr(x, y, classes, best_c, make_stream(seed, "svm-final", best_c))


def svm_confidence(model, rows):
    """Per-class confidences: softmax over the signed margins; rows sum to 1."""
    d = model.decision(rows)
    d = d - d.max(axis=1, keepdims=True)
    e = np.exp(d)
    return e / e.sum(axis=1, keepdims=True)
