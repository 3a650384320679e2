"""Datasets on disk and in memory: binary feature files, CSV interchange,
synthetic Gaussian-mixture generation, quadrant labeling, normalization."""

from __future__ import annotations

import csv
import io
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .diffcore import stream
from .featx import FeatureMatrix

MAGIC = b"EAFX"
VERSION = 1
_KINDS = {"psd": 0, "de": 1}
_KIND_NAMES = {v: k for k, v in _KINDS.items()}
_HEADER = struct.Struct("<4sHBBIIII")  # magic, version, kind, flags, n, ch, bands, arity


class FormatError(ValueError):
    """Malformed feature file or checkpoint; carries the failing byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass
class LabeledDataset:
    """Feature matrix plus integer class labels (n_classes == 0 means unlabeled)."""

    features: FeatureMatrix
    labels: np.ndarray | None
    n_classes: int

    def __post_init__(self):
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.uint32)
            if self.labels.shape != (self.features.n_samples,):
                raise ValueError("one label per sample required")
            if self.labels.size and self.labels.max() >= self.n_classes:
                raise ValueError(f"label {self.labels.max()} >= arity {self.n_classes}")
        elif self.n_classes:
            raise ValueError("n_classes must be 0 for unlabeled data")

    @property
    def n_samples(self):
        return self.features.n_samples

    @property
    def dim(self):
        return self.features.dim

    @property
    def x(self):
        return self.features.data

    @property
    def y(self):
        return self.labels

    def class_counts(self):
        counts = np.zeros(self.n_classes, dtype=int)
        if self.labels is not None:
            for c in self.labels:
                counts[c] += 1
        return counts

    def subset(self, indices):
        indices = np.asarray(indices)
        fm = FeatureMatrix(self.features.data[indices], self.features.n_channels,
                           self.features.n_bands, self.features.feature_kind)
        labels = None if self.labels is None else self.labels[indices]
        return LabeledDataset(fm, labels, self.n_classes)

    def with_rows(self, rows, labels):
        """A new dataset with extra rows appended."""
        rows = np.atleast_2d(np.asarray(rows, dtype=self.x.dtype))
        if rows.shape[0] == 0:
            return self.subset(np.arange(self.n_samples))
        data = np.concatenate([self.x, rows], axis=0)
        fm = FeatureMatrix(data, self.features.n_channels, self.features.n_bands,
                           self.features.feature_kind)
        lab = np.concatenate([self.labels, np.asarray(labels, dtype=np.uint32)])
        return LabeledDataset(fm, lab, self.n_classes)


def atomic_write(path, payload: bytes):
    """Write bytes via a temp file and rename, so readers never see partial files."""
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def dataset_bytes(ds: LabeledDataset) -> bytes:
    kind = _KINDS[ds.features.feature_kind]
    header = _HEADER.pack(MAGIC, VERSION, kind, 0, ds.n_samples,
                          ds.features.n_channels, ds.features.n_bands, ds.n_classes)
    payload = np.ascontiguousarray(ds.x, dtype="<f4").tobytes()
    labels = b"" if ds.labels is None else np.ascontiguousarray(
        ds.labels, dtype="<u4").tobytes()
    return header + payload + labels


def save_features(path, ds: LabeledDataset):
    atomic_write(path, dataset_bytes(ds))


def load_features(path) -> LabeledDataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    return dataset_from_bytes(blob)


def dataset_from_bytes(blob: bytes) -> LabeledDataset:
    if len(blob) < _HEADER.size:
        raise FormatError("truncated header", offset=len(blob))
    magic, version, kind, _flags, n, ch, bands, arity = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if kind not in _KIND_NAMES:
        raise FormatError(f"unknown feature kind {kind}", offset=6)
    dim = ch * bands
    need = n * dim * 4
    start = _HEADER.size
    if len(blob) < start + need:
        raise FormatError("truncated payload", offset=len(blob))
    data = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=start)
    data = data.reshape(n, dim).copy() if n else np.zeros((0, dim), dtype=np.float32)
    fm = FeatureMatrix(data, ch, bands, _KIND_NAMES[kind])
    labels = None
    if arity:
        lstart = start + need
        if len(blob) < lstart + n * 4:
            raise FormatError("truncated label block", offset=len(blob))
        labels = np.frombuffer(blob, dtype="<u4", count=n, offset=lstart).copy()
        bad = np.flatnonzero(labels >= arity)
        if bad.size:
            raise FormatError(f"label {labels[bad[0]]} >= arity {arity}",
                              offset=lstart + int(bad[0]) * 4)
    return LabeledDataset(fm, labels, arity)


# --- CSV interchange ---

def to_csv(ds: LabeledDataset) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    cols = [f"d{i}" for i in range(ds.dim)]
    if ds.labels is not None:
        cols.append("label")
    writer.writerow(cols)
    for i in range(ds.n_samples):
        row = [repr(float(v)) for v in ds.x[i]]
        if ds.labels is not None:
            row.append(str(int(ds.labels[i])))
        writer.writerow(row)
    return out.getvalue()


def from_csv(text, n_channels, n_bands, feature_kind="de") -> LabeledDataset:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise FormatError("empty CSV")
    has_label = header and header[-1] == "label"
    dim = len(header) - (1 if has_label else 0)
    if dim != n_channels * n_bands:
        raise FormatError(f"CSV has {dim} feature columns, expected "
                          f"{n_channels * n_bands}")
    rows, labels = [], []
    for rec in reader:
        if not rec:
            continue
        vals = [float(v) for v in rec[:dim]]
        rows.append(vals)
        if has_label:
            labels.append(int(rec[dim]))
    data = np.asarray(rows, dtype=np.float32) if rows else \
        np.zeros((0, dim), dtype=np.float32)
    fm = FeatureMatrix(data, n_channels, n_bands, feature_kind)
    if has_label:
        arr = np.asarray(labels, dtype=np.uint32)
        arity = int(arr.max()) + 1 if arr.size else 0
        return LabeledDataset(fm, arr, arity)
    return LabeledDataset(fm, None, 0)


# --- synthetic data ---

@dataclass
class SynthSpec:
    """Gaussian-mixture feature generator standing in for restricted corpora.

    Per class: mean vector drawn at `class_sep` scale; covariance is block
    structured per band, each block scale^2 * ((1-rho) I + rho J/ch).
    Explicit `cov_blocks` (one SPD matrix per band) override the default.
    label_noise relabels that fraction of rows uniformly among the other
    classes, imitating imprecisely labeled recordings.
    """

    n_classes: int
    n_channels: int
    n_bands: int
    samples_per_class: int
    class_sep: float = 1.0
    band_corr: float = 0.3
    noise_scale: float = 1.0
    label_noise: float = 0.0
    feature_kind: str = "de"
    seed: int = 0
    cov_blocks: list | None = None

    @property
    def dim(self):
        return self.n_channels * self.n_bands


def seed_like(samples_per_class=300, seed=0, **kw):
    """3-class, 62 channels x 5 bands (310 dims)."""
    return SynthSpec(3, 62, 5, samples_per_class, seed=seed, **kw)


def deap_like(samples_per_class=150, seed=0, **kw):
    """4-class, 32 channels x 4 bands (128 dims)."""
    return SynthSpec(4, 32, 4, samples_per_class, seed=seed, **kw)


def seed_scarce(samples_per_class=30, seed=0, class_sep=0.2, label_noise=0.15,
                **kw):
    """Scarce, noisily labeled 3-class preset; a plain linear SVM lands
    mid-range, leaving visible headroom for augmentation."""
    return SynthSpec(3, 62, 5, samples_per_class, class_sep=class_sep,
                     label_noise=label_noise, seed=seed, **kw)


def _default_block(spec):
    ch = spec.n_channels
    j = np.full((ch, ch), spec.band_corr / ch)
    block = spec.noise_scale ** 2 * ((1.0 - spec.band_corr) * np.eye(ch) + j)
    return block


def synth_generate(spec: SynthSpec) -> LabeledDataset:
    """Deterministic Gaussian-mixture dataset with channel-major layout."""
    if spec.cov_blocks is not None:
        blocks = [np.asarray(b, dtype=np.float64) for b in spec.cov_blocks]
        if len(blocks) != spec.n_bands:
            raise ValueError("one covariance block per band required")
    else:
        blocks = [_default_block(spec)] * spec.n_bands
    chols = []
    for b, block in enumerate(blocks):
        if block.shape != (spec.n_channels, spec.n_channels) or \
                not np.allclose(block, block.T):
            raise ValueError(f"covariance block {b} is not symmetric "
                             f"{spec.n_channels}x{spec.n_channels}")
        try:
            chols.append(np.linalg.cholesky(block))
        except np.linalg.LinAlgError:
            raise ValueError(f"covariance block {b} is not positive definite")

    rng = stream(spec.seed, "synth", spec.n_classes, spec.dim)
    means = spec.class_sep * rng.standard_normal((spec.n_classes, spec.dim))
    n = spec.n_classes * spec.samples_per_class
    data = np.empty((n, spec.dim), dtype=np.float64)
    labels = np.empty(n, dtype=np.uint32)
    row = 0
    for c in range(spec.n_classes):
        crng = stream(spec.seed, "synth-class", c)
        z = crng.standard_normal((spec.samples_per_class, spec.n_bands,
                                  spec.n_channels))
        for b in range(spec.n_bands):
            corr = z[:, b, :] @ chols[b].T
            cols = np.arange(spec.n_channels) * spec.n_bands + b
            data[row:row + spec.samples_per_class, cols] = corr
        data[row:row + spec.samples_per_class] += means[c]
        labels[row:row + spec.samples_per_class] = c
        row += spec.samples_per_class
    if spec.label_noise > 0.0 and spec.n_classes > 1:
        noise_rng = stream(spec.seed, "synth-label-noise")
        n_flip = int(round(spec.label_noise * n))
        flip = noise_rng.choice(n, size=n_flip, replace=False)
        shift = noise_rng.integers(1, spec.n_classes, size=n_flip)
        labels[flip] = (labels[flip] + shift) % spec.n_classes
    fm = FeatureMatrix(data.astype(np.float32), spec.n_channels, spec.n_bands,
                       spec.feature_kind)
    return LabeledDataset(fm, labels, spec.n_classes)


def ring_mixture(n, rng, n_modes=8, radius=2.0, sigma=0.1):
    """2-D Gaussian ring toy set; returns (points, mode ids, mode centers)."""
    angles = 2.0 * np.pi * np.arange(n_modes) / n_modes
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    modes = rng.integers(0, n_modes, size=n)
    pts = centers[modes] + sigma * rng.standard_normal((n, 2))
    return pts, modes, centers


# --- quadrant labeling ---

QUADRANTS = ("HVHA", "HVLA", "LVHA", "LVLA")


def deap_quadrant(valence, arousal):
    """Four-quadrant class from 1-9 ratings; high means level > 5."""
    for name, v in (("valence", valence), ("arousal", arousal)):
        if not 1.0 <= v <= 9.0:
            raise ValueError(f"{name} rating {v} outside [1, 9]")
    high_v = valence > 5.0
    high_a = arousal > 5.0
    if high_v:
        return 0 if high_a else 1
    return 2 if high_a else 3


# --- normalization ---

@dataclass
class NormStats:
    """Per-dimension z-score statistics fitted on training rows only.

    Dimensions with zero spread are centered but not scaled, which keeps the
    transform affine and invertible everywhere it scaled.
    """

    mean: np.ndarray
    std: np.ndarray
    scale: np.ndarray = field(init=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        self.scale = np.where(self.std > 0, self.std, 1.0)

    def transform(self, rows):
        return (np.asarray(rows, dtype=np.float64) - self.mean) / self.scale

    def inverse(self, rows):
        return np.asarray(rows, dtype=np.float64) * self.scale + self.mean


def normalize(train_rows) -> NormStats:
    rows = np.asarray(train_rows, dtype=np.float64)
    return NormStats(rows.mean(axis=0), rows.std(axis=0))
