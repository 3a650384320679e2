"""Experiment harness: stratified folds, augmentation sweeps, significance.

A sweep cell is (method, classifier, append count); each cell trains on the
augmented training folds and scores the held-out fold, for every fold of the
plan. Augmentation, normalization and classifier fitting see training-fold
rows only. Generators are trained once per (method, fold) and shared across
counts: the selective loop's accepted sequence is count-independent, so a
count-c cell reads the first c rows of the method's pool.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as scipy_stats

from . import augment as aug
from . import clf, dataio, genmod
from .clf.adapters import DnnTrainer, SvmTrainer
from .diffcore import stream as make_stream


@dataclass
class FoldPlan:
    k: int
    folds: list  # of index arrays
    seed: int

    def train_indices(self, fold):
        return np.concatenate([f for i, f in enumerate(self.folds) if i != fold])


def make_folds(dataset, k, seed):
    """Random label-stratified partition; fold sizes differ by at most one.

    Classes smaller than k trigger a warning and an unstratified split.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    n = dataset.n_samples
    if n < k:
        raise ValueError(f"dataset of {n} samples cannot make {k} folds")
    rng = make_stream(seed, "folds", k)
    labels = dataset.labels
    if labels is not None and np.min(np.bincount(labels)) < k:
        warnings.warn("a class has fewer samples than folds; "
                      "falling back to an unstratified split")
        labels = None
    groups = [np.flatnonzero(labels == c) for c in np.unique(labels)] \
        if labels is not None else [np.arange(n)]
    buckets = [[] for _ in range(k)]
    cursor = 0
    for idx in groups:
        idx = idx[rng.permutation(idx.size)]
        for i in idx:  # deal one by one, rotating folds across group boundaries
            buckets[cursor % k].append(int(i))
            cursor += 1
    folds = [np.sort(np.array(b, dtype=np.int64)) for b in buckets]
    sizes = [f.size for f in folds]
    assert max(sizes) - min(sizes) <= 1
    return FoldPlan(k, folds, seed)


@dataclass
class SweepOptions:
    """Knobs for one sweep run; defaults follow the package-wide choices."""

    gen_epochs: int = 300
    vae_epochs: int = 200
    gen_hidden: tuple = (256, 256, 256)
    gen_lr: float = 1e-4
    vae_lr: float = 1e-3
    gen_batch: int = 32
    threshold: float = 0.9
    max_rounds: int = 50
    sigma: float = 0.001
    angle_deg: float = 18.0
    svm_c_grid: tuple = clf.DEFAULT_C_GRID
    loop_c: float = 1.0
    dnn_widths: tuple = (128, 128, 128, 128)
    dnn_epochs: int = 300
    dnn_batch: int = 128
    dnn_lr: float = 1e-4
    dnn_shortcut: bool = True
    folds: int = 5
    montage: object = None


@dataclass
class CellResult:
    method: str
    classifier: str
    count: int
    seed: int
    accuracies: list
    status: str = "ok"
    reason: str = ""
    provenance: dict = field(default_factory=dict)


@dataclass
class SweepReport:
    feature_kind: str
    rows: list = field(default_factory=list)  # (method, clf, count, seed, fold, acc)
    failures: list = field(default_factory=list)

    def add_cell(self, cell):
        if cell.status != "ok":
            self.failures.append((cell.method, cell.classifier, cell.count,
                                  cell.seed, cell.reason))
            return
        for fold, acc in enumerate(cell.accuracies):
            self.rows.append((cell.method, cell.classifier, cell.count,
                              cell.seed, fold, float(acc)))

    def group(self):
        out = {}
        for method, c, count, seed, fold, acc in self.rows:
            out.setdefault((method, c), {}).setdefault(count, []).append(acc)
        return out

    def aggregates(self):
        """mean/std per (method, classifier, count), pooled over seeds and folds."""
        agg = {}
        for key, by_count in self.group().items():
            agg[key] = {count: (float(np.mean(v)), float(np.std(v)))
                        for count, v in sorted(by_count.items())}
        return agg

    def peaks(self):
        """(peak count, peak mean, improvement over count 0) per group;
        ties resolve to the smaller count."""
        out = {}
        for key, counts in self.aggregates().items():
            base = counts.get(0, (float("nan"),))[0]
            ordered = sorted(counts)
            best_count = ordered[0]
            best_mean = counts[best_count][0]
            for count in ordered[1:]:
                if counts[count][0] > best_mean + 1e-12:
                    best_count, best_mean = count, counts[count][0]
            out[key] = (best_count, best_mean, best_mean - base)
        return out

    def to_csv(self):
        lines = ["method,classifier,feature,count,seed,fold,accuracy"]
        for method, c, count, seed, fold, acc in sorted(self.rows):
            lines.append(f"{method},{c},{self.feature_kind},{count},{seed},"
                         f"{fold},{acc!r}")
        for method, c, count, seed, reason in sorted(self.failures):
            safe = reason.replace(",", ";").replace("\n", " ")
            lines.append(f"{method},{c},{self.feature_kind},{count},{seed},"
                         f"missing,{safe}")
        return "\n".join(lines) + "\n"

    def to_markdown(self):
        agg = self.aggregates()
        peaks = self.peaks()
        counts = sorted({count for by in agg.values() for count in by})
        header = "| method | " + " | ".join(str(c) for c in counts) + " | peak | up |"
        sep = "|" + "---|" * (len(counts) + 3)
        lines = [header, sep]
        for (method, c), by_count in sorted(agg.items()):
            cells = []
            for count in counts:
                if count in by_count:
                    mean, std = by_count[count]
                    cells.append(f"{100 * mean:.1f}/{100 * std:.1f}")
                else:
                    cells.append("-")
            peak_count, _, delta = peaks[(method, c)]
            lines.append(f"| {method}+{c} | " + " | ".join(cells) +
                         f" | {peak_count} | {100 * delta:.1f} |")
        return "\n".join(lines) + "\n"


def merge_reports(reports):
    merged = SweepReport(reports[0].feature_kind)
    for r in reports:
        if r.feature_kind != merged.feature_kind:
            raise ValueError("cannot merge reports over different feature kinds")
        merged.rows.extend(r.rows)
        merged.failures.extend(r.failures)
    merged.rows.sort()
    merged.failures.sort()
    return merged


# --- augmentation pools ---

def _gen_meta(dataset):
    fm = dataset.features
    return {"n_channels": fm.n_channels, "n_bands": fm.n_bands,
            "feature_kind": fm.feature_kind}


def build_pool(method, train_ds, max_count, seed, fold, options):
    """All appended rows one (method, fold) pair can ever need, in order.

    Smaller counts take prefixes; a rounds-exhausted selective run yields its
    partial pool so the counts it does cover still succeed.
    """
    tag = (method, "fold", fold)
    if max_count == 0:
        return np.zeros((0, train_ds.dim)), np.zeros(0, dtype=np.uint32), []
    init = make_stream(seed, "pool-init", *tag)
    draws = make_stream(seed, "pool-draws", *tag)
    if method in ("cwgan", "cvae"):
        if method == "cwgan":
            model = genmod.build_gan(train_ds.dim, init, n_classes=train_ds.n_classes,
                                     hidden=options.gen_hidden)
            cfg = genmod.gan_config(seed=seed, epochs=options.gen_epochs,
                                    batch_size=options.gen_batch, lr=options.gen_lr)
        else:
            model = genmod.build_vae(train_ds.dim, init, n_classes=train_ds.n_classes,
                                     hidden=options.gen_hidden)
            cfg = genmod.vae_config(seed=seed, epochs=options.vae_epochs,
                                    batch_size=options.gen_batch, lr=options.vae_lr)
        model.meta = _gen_meta(train_ds)
        genmod.train(model, train_ds.x, train_ds.labels, config=cfg)
        return aug.augment_full(model, max_count, stream=draws, seed=seed)
    if method in ("swgan", "svae"):
        if method == "swgan":
            model = genmod.build_gan(train_ds.dim, init, hidden=options.gen_hidden)
            cfg = genmod.gan_config(seed=seed, epochs=options.gen_epochs,
                                    batch_size=options.gen_batch, lr=options.gen_lr)
        else:
            model = genmod.build_vae(train_ds.dim, init, hidden=options.gen_hidden)
            cfg = genmod.vae_config(seed=seed, epochs=options.vae_epochs,
                                    batch_size=options.gen_batch, lr=options.vae_lr)
        model.meta = _gen_meta(train_ds)
        genmod.train(model, train_ds.x, config=cfg)
        plan = aug.AugmentationPlan(method, max_count, threshold=options.threshold,
                                    max_rounds=options.max_rounds)
        try:
            return aug.augment_selective(train_ds, model,
                                         SvmTrainer(c_grid=(options.loop_c,),
                                                    seed=seed),
                                         plan, draws, seed=seed)
        except aug.RoundsExhausted as err:
            return err.rows, err.labels, err.provenance
    if method == "gau":
        return aug.gaussian_augment(train_ds, options.sigma, max_count, draws,
                                    seed=seed)
    if method == "rda":
        montage = options.montage or aug.load_montage(train_ds.features.n_channels)
        return aug.rda_augment(train_ds, montage, options.angle_deg, max_count,
                               draws, seed=seed)
    raise ValueError(f"unknown augmentation method {method!r}")


def run_cell(dataset, method, classifier, count, plan, seed, options=None,
             pools=None):
    """Per-fold accuracies for one sweep cell.

    Augmentation is fit on the training folds only; normalization statistics
    come from the original training-fold rows and are applied unchanged to
    the held-out fold. Failures are reported in the result, not raised.
    """
    options = options or SweepOptions()
    accs = []
    provenance = {"train_stats": [], "fold_train_indices": [], "source_rows": []}
    try:
        for fold in range(plan.k):
            train_idx = plan.train_indices(fold)
            test_idx = plan.folds[fold]
            train_ds = dataset.subset(train_idx)
            if count > 0:
                if pools is not None:
                    rows, labels, prov = pools[(method, fold)]
                else:
                    rows, labels, prov = build_pool(method, train_ds, count, seed,
                                                    fold, options)
                if len(rows) < count:
                    raise aug.RoundsExhausted(len(rows), count,
                                              options.max_rounds, 0.0)
                rows, labels, prov = rows[:count], labels[:count], prov[:count]
                train_x = np.concatenate([train_ds.x, rows])
                train_y = np.concatenate([train_ds.labels, labels])
            else:
                rows, labels, prov = None, None, []
                train_x, train_y = train_ds.x, train_ds.labels

            stats = dataio.normalize(train_ds.x)
            xt = stats.transform(train_x)
            test_x = stats.transform(dataset.x[test_idx])
            test_y = dataset.labels[test_idx]
            if classifier == "svm":
                model = clf.svm_train(xt, train_y, c_grid=list(options.svm_c_grid),
                                      seed=seed)
                acc = model.accuracy(test_x, test_y)
            elif classifier == "dnn":
                trainer = DnnTrainer(widths=options.dnn_widths,
                                     shortcut=options.dnn_shortcut,
                                     epochs=options.dnn_epochs,
                                     batch_size=options.dnn_batch,
                                     lr=options.dnn_lr, seed=seed)
                acc = trainer(xt, train_y).accuracy(test_x, test_y)
            else:
                raise ValueError(f"unknown classifier kind {classifier!r}")
            accs.append(acc)
            provenance["train_stats"].append((stats.mean.copy(), stats.std.copy()))
            provenance["fold_train_indices"].append(train_idx)
            provenance["source_rows"].append(
                [p.source_row for p in prov if p.source_row >= 0])
        return CellResult(method, classifier, count, seed, accs,
                          provenance=provenance)
    except Exception as err:  # cell failures must not abort the sweep
        return CellResult(method, classifier, count, seed, [],
                          status="failed",
                          reason=f"fold {len(accs)}: {type(err).__name__}: {err}")


def run_sweep(dataset, methods, classifiers, counts, seed, options=None,
              jobs=1, cell_hook=None):
    """Cartesian sweep over methods x classifiers x counts.

    counts must include 0 (the unaugmented baseline). cell_hook(key, None)
    may return a cached CellResult; cell_hook(key, cell) stores a fresh one.
    """
    counts = sorted(set(counts))
    if not counts or 0 not in counts:
        raise ValueError("counts must include the unaugmented baseline 0")
    options = options or SweepOptions()
    plan = make_folds(dataset, options.folds, seed)
    report = SweepReport(dataset.features.feature_kind)

    def cell_key(method, classifier, count):
        return ("cell", method, classifier, count, seed)

    cached = {}
    if cell_hook is not None:
        for method in methods:
            for classifier in classifiers:
                for count in counts:
                    hit = cell_hook(cell_key(method, classifier, count), None)
                    if hit is not None:
                        cached[(method, classifier, count)] = hit

    max_count = counts[-1]
    need_pool = sorted({m for m in methods if max_count > 0 and any(
        (m, c, count) not in cached
        for c in classifiers for count in counts if count > 0)})
    pool_keys = [(m, f) for m in need_pool for f in range(plan.k)]

    def make_pool(key):
        method, fold = key
        train_ds = dataset.subset(plan.train_indices(fold))
        return key, build_pool(method, train_ds, max_count, seed, fold, options)

    pools = {}
    if jobs > 1 and len(pool_keys) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for key, value in pool.map(make_pool, pool_keys):
                pools[key] = value
    else:
        for key in pool_keys:
            pools[key] = make_pool(key)[1]

    for method in methods:
        for classifier in classifiers:
            for count in counts:
                cell = cached.get((method, classifier, count))
                if cell is None:
                    cell = run_cell(dataset, method, classifier, count, plan,
                                    seed, options,
                                    pools=pools if count > 0 else None)
                    cell.provenance = {}  # keep cached cells serializable
                    if cell_hook is not None:
                        cell_hook(cell_key(method, classifier, count), cell)
                report.add_cell(cell)
    return report


def significance(acc_a, acc_b):
    """Two-sided paired t-test p-value over per-experiment accuracies.

    Zero-variance differences degenerate to p=0 when the means differ and
    p=1 when they match.
    """
    a = np.asarray(acc_a, dtype=np.float64)
    b = np.asarray(acc_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length samples with n >= 2")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0.0:
        return 0.0 if d.mean() != 0.0 else 1.0
    t = d.mean() / (sd / np.sqrt(d.size))
    return float(2.0 * scipy_stats.t.sf(abs(t), d.size - 1))


def audit_no_leakage(dataset, plan, cell):
    """Check that nothing from any test fold reached training-side artifacts.

    Verifies that every recorded augmentation source row maps into the
    training folds, and that the stored normalization statistics equal
    statistics recomputed from the training-fold rows alone. Returns the
    number of checks performed.
    """
    checks = 0
    prov = cell.provenance
    for fold in range(plan.k):
        train_idx = prov["fold_train_indices"][fold]
        test_set = set(int(i) for i in plan.folds[fold])
        assert not (set(int(i) for i in train_idx) & test_set)
        for src in prov["source_rows"][fold]:
            assert 0 <= src < len(train_idx)
            assert int(train_idx[src]) not in test_set
            checks += 1
        mean, std = prov["train_stats"][fold]
        fresh = dataio.normalize(dataset.x[train_idx])
        assert np.array_equal(mean, fresh.mean) and np.array_equal(std, fresh.std)
        checks += 1
    return checks
