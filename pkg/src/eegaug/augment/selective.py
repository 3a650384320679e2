"""Selective augmentation: keep only confidently classified generated rows.

The loop: generate a candidate batch from an unconditional generator, train
a classifier on the real rows plus everything accepted so far, label the
candidates with it, and keep those whose top-class confidence exceeds the
threshold. Repeat until enough rows are accepted or the round budget runs
out.
"""

from __future__ import annotations

import numpy as np

from ..dataio import normalize
from ..genmod import GanModel, VaeModel, build_gan, build_vae, gan_config, \
    sample, train, vae_config
from ..diffcore import stream as make_stream
from .plans import ProvenanceRow


class RoundsExhausted(RuntimeError):
    """The acceptance target was not reached within max_rounds.

    Carries the partial results so callers can still use what was accepted.
    """

    def __init__(self, accepted, target, rounds, acceptance_rate,
                 rows=None, labels=None, provenance=None):
        super().__init__(
            f"accepted {accepted}/{target} rows after {rounds} rounds "
            f"(acceptance rate {acceptance_rate:.3f})")
        self.accepted = accepted
        self.target = target
        self.rounds = rounds
        self.acceptance_rate = acceptance_rate
        self.rows = rows if rows is not None else np.zeros((0, 0))
        self.labels = labels if labels is not None else np.zeros(0, dtype=np.uint32)
        self.provenance = provenance or []


def train_selective_generator(kind, dataset, seed, gen_cfg=None, hidden=None,
                              stream_tag="selective-gen"):
    """Train the unconditional generator a selective plan draws from."""
    x = dataset.x
    init = make_stream(seed, stream_tag, "init")
    if kind == "swgan":
        model = build_gan(x.shape[1], init, **({"hidden": hidden} if hidden else {}))
        cfg = gen_cfg or gan_config(seed=seed)
    elif kind == "svae":
        model = build_vae(x.shape[1], init, **({"hidden": hidden} if hidden else {}))
        cfg = gen_cfg or vae_config(seed=seed)
    else:
        raise ValueError(f"not a selective method: {kind!r}")
    train(model, x, config=cfg)
    return model


def augment_selective(dataset, generator, classifier_trainer, plan, stream,
                      seed=0, candidate_batch=None, refresh=None):
    """Run the selective loop; returns (rows, labels, provenance).

    generator is a trained unconditional model ('swgan'/'svae' may also be
    retrained each round via `refresh`, a callable round -> model). Every
    returned row's recorded confidence strictly exceeds plan.threshold.
    Raises RoundsExhausted when the target is not met.
    """
    if not plan.selective:
        raise ValueError(f"plan method {plan.method!r} is not selective")
    if isinstance(generator, (VaeModel, GanModel)) and generator.conditional:
        raise ValueError("selective augmentation uses an unconditional generator")
    n = plan.n_append
    if n == 0:
        return (np.zeros((0, dataset.dim)), np.zeros(0, dtype=np.uint32), [])

    stats = normalize(dataset.x)
    batch_n = candidate_batch or max(2 * n, 2000)
    rows, labels, prov = [], [], []
    generated_total = 0
    for round_no in range(1, plan.max_rounds + 1):
        if refresh is not None:
            generator = refresh(round_no)
        candidates = sample(generator, batch_n, stream=stream)
        generated_total += batch_n

        train_x = dataset.x if not rows else np.concatenate(
            [dataset.x, np.asarray(rows)])
        train_y = dataset.labels if not labels else np.concatenate(
            [dataset.labels, np.asarray(labels, dtype=np.uint32)])
        model = classifier_trainer(stats.transform(train_x), train_y)

        conf = model.confidences(stats.transform(candidates))
        pred = np.argmax(conf, axis=1)
        top = conf[np.arange(len(conf)), pred]
        for i in np.flatnonzero(top > plan.threshold):
            rows.append(candidates[i])
            labels.append(int(pred[i]))
            prov.append(ProvenanceRow(plan.method, round_no, -1, int(pred[i]),
                                      float(top[i]), seed))
            if len(rows) == n:
                return np.asarray(rows), np.asarray(labels, dtype=np.uint32), prov
    raise RoundsExhausted(
        len(rows), n, plan.max_rounds, len(rows) / max(generated_total, 1),
        rows=np.asarray(rows) if rows else np.zeros((0, dataset.dim)),
        labels=np.asarray(labels, dtype=np.uint32), provenance=prov)
