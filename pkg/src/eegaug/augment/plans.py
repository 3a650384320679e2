"""Augmentation plans and per-row provenance records."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

METHODS = ("cwgan", "cvae", "swgan", "svae", "gau", "rda")
SELECTIVE_METHODS = ("swgan", "svae")
DEFAULT_COUNTS = (0, 200, 500, 1000, 3000, 5000, 10000, 15000, 20000)

SIDECAR_HEADER = ("index", "method", "round", "source_row", "label",
                  "confidence", "seed")


@dataclass
class AugmentationPlan:
    method: str
    n_append: int
    threshold: float = 0.9
    max_rounds: int = 50
    sigma: float = 0.001
    angle_deg: float = 18.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of "
                             f"{METHODS}")
        if self.n_append < 0:
            raise ValueError("n_append must be >= 0")
        if self.method in SELECTIVE_METHODS:
            if not 0.0 < self.threshold <= 1.0:
                raise ValueError("threshold must lie in (0, 1]")
            if self.max_rounds < 1:
                raise ValueError("max_rounds must be >= 1")
        if self.method == "gau" and self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.method == "rda" and not -180.0 <= self.angle_deg <= 180.0:
            raise ValueError("angle must lie in [-180, 180] degrees")

    @property
    def selective(self):
        return self.method in SELECTIVE_METHODS


@dataclass
class ProvenanceRow:
    """Where one appended row came from."""

    method: str
    round: int
    source_row: int      # index into the source dataset; -1 for generated rows
    label: int
    confidence: float | None
    seed: int


def sidecar_csv(rows) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SIDECAR_HEADER)
    for i, r in enumerate(rows):
        conf = "" if r.confidence is None else repr(float(r.confidence))
        writer.writerow([i, r.method, r.round, r.source_row, r.label, conf, r.seed])
    return out.getvalue()


def read_sidecar(text) -> list:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != SIDECAR_HEADER:
        raise ValueError(f"unexpected sidecar header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        rows.append(ProvenanceRow(rec[1], int(rec[2]), int(rec[3]), int(rec[4]),
                                  float(rec[5]) if rec[5] else None, int(rec[6])))
    return rows
