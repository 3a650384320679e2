"""Random hyperparameter search for the deep classifier."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..diffcore import stream as make_stream
from .dnn import DnnConfig, build_dnn, dnn_accuracy, dnn_train


@dataclass(frozen=True)
class SearchSpace:
    lrs: tuple = (0.0005, 0.0001, 0.00005, 0.00001)
    depths: tuple = (4, 5, 6, 7, 8)
    batches: tuple = (128, 256, 512)
    widths: tuple = (128, 256, 512)
    shortcut_options: tuple = (True, False)
    trials: int = 10
    epochs: int = 300


@dataclass
class TrialResult:
    index: int
    config: dict
    val_accuracy: float


def sample_config(space, rng):
    depth = int(rng.choice(space.depths))
    return {
        "lr": float(rng.choice(space.lrs)),
        "depth": depth,
        "batch_size": int(rng.choice(space.batches)),
        "widths": tuple(int(rng.choice(space.widths)) for _ in range(depth)),
        "shortcut": bool(rng.choice(np.array(space.shortcut_options))),
    }


def random_search(space, train_x, train_y, val_x, val_y, seed=0):
    """Sample `trials` configs, train each, keep the best validation accuracy.

    Ties break toward the earlier trial. Returns (best config dict, trained
    model, trial log).
    """
    if space.trials < 1:
        raise ValueError("trials must be >= 1")
    n_classes = int(np.max(train_y)) + 1
    rng = make_stream(seed, "search-sample")
    log, best, best_model = [], None, None
    for t in range(space.trials):
        cfg = sample_config(space, rng)
        # training is a pure function of (config, data, seed): identical
        # configs tie exactly and the earliest trial wins
        model = build_dnn(train_x.shape[1], cfg["widths"], n_classes,
                          cfg["shortcut"], make_stream(seed, "search-init"))
        dnn_train(model, train_x, train_y,
                  DnnConfig(epochs=space.epochs, batch_size=cfg["batch_size"],
                            lr=cfg["lr"], seed=seed))
        acc = dnn_accuracy(model, val_x, val_y)
        log.append(TrialResult(t, cfg, acc))
        if best is None or acc > best.val_accuracy + 1e-12:
            best, best_model = log[-1], model
    return best.config, best_model, log
