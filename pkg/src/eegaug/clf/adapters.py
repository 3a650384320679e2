"""Uniform fit/score adapters so harness code can swap classifier kinds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..diffcore import stream as make_stream
from .dnn import DnnConfig, build_dnn, dnn_confidence, dnn_predict, dnn_train
from .svm import svm_confidence, svm_train


@dataclass
class FittedSvm:
    model: object

    def confidences(self, rows):
        return svm_confidence(self.model, rows)

    def predict(self, rows):
        return self.model.predict(rows)

    def accuracy(self, rows, labels):
        return self.model.accuracy(rows, labels)


@dataclass
class SvmTrainer:
    """Callable trainer: normalized (x, y) -> fitted one-vs-rest SVM."""

    c_grid: tuple = (1.0,)
    seed: int = 0

    def __call__(self, x, y):
        return FittedSvm(svm_train(x, y, c_grid=list(self.c_grid), seed=self.seed))


@dataclass
class FittedDnn:
    model: object

    def confidences(self, rows):
        return dnn_confidence(self.model, np.asarray(rows))

    def predict(self, rows):
        return dnn_predict(self.model, np.asarray(rows))

    def accuracy(self, rows, labels):
        return float(np.mean(self.predict(rows) == np.asarray(labels)))


@dataclass
class DnnTrainer:
    widths: tuple = (64, 64, 64, 64)
    shortcut: bool = True
    epochs: int = 300
    batch_size: int = 128
    lr: float = 1e-4
    seed: int = 0

    def __call__(self, x, y):
        n_classes = int(np.max(y)) + 1
        model = build_dnn(x.shape[1], self.widths, n_classes, self.shortcut,
                          make_stream(self.seed, "dnn-adapter-init"))
        dnn_train(model, x, y, DnnConfig(epochs=self.epochs,
                                         batch_size=self.batch_size,
                                         lr=self.lr, seed=self.seed))
        return FittedDnn(model)
