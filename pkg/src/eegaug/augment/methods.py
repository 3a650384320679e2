"""Full-usage generation and the Gaussian-noise baseline."""

from __future__ import annotations

import numpy as np

from ..dataio import normalize
from ..genmod import sample
from .plans import ProvenanceRow


def uniform_mix(n, n_classes):
    """Near-even class counts; the remainder goes to the lowest class ids."""
    base, extra = divmod(n, n_classes)
    return {c: base + (1 if c < extra else 0) for c in range(n_classes)}


def augment_full(model, n, class_mix=None, stream=None, seed=0):
    """Generate n labeled rows from a trained conditional model, unfiltered.

    class_mix maps label -> count and must sum to n; the default splits
    evenly. Returns (rows, labels, provenance).
    """
    if not model.conditional:
        raise ValueError("full-usage augmentation needs a conditional model")
    if class_mix is None:
        class_mix = uniform_mix(n, model.n_classes)
    if sum(class_mix.values()) != n:
        raise ValueError(f"class mix sums to {sum(class_mix.values())}, not {n}")
    labels = np.concatenate([np.full(count, label, dtype=np.uint32)
                             for label, count in sorted(class_mix.items())]) \
        if n else np.zeros(0, dtype=np.uint32)
    rows = sample(model, n, labels=labels, stream=stream)
    prov = [ProvenanceRow(model.kind, 0, -1, int(l), None, seed) for l in labels]
    return rows, labels, prov


def gaussian_augment(dataset, sigma, n, stream, stats=None, seed=0):
    """Resample source rows and jitter them with N(0, sigma^2) noise.

    The noise is applied in normalized feature space (statistics from the
    dataset unless supplied), then mapped back, so sigma is comparable
    across feature scales. Labels are copied from the sampled sources.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if n == 0:
        return (np.zeros((0, dataset.dim)), np.zeros(0, dtype=np.uint32), [])
    if dataset.n_samples == 0:
        raise ValueError("cannot augment an empty dataset")
    if stats is None:
        stats = normalize(dataset.x)
    src = stream.integers(0, dataset.n_samples, size=n)
    base = stats.transform(dataset.x[src])
    noisy = base + sigma * stream.standard_normal(base.shape)
    rows = stats.inverse(noisy)
    labels = dataset.labels[src].copy()
    prov = [ProvenanceRow("gau", 0, int(s), int(l), None, seed)
            for s, l in zip(src, labels)]
    return rows, labels, prov
