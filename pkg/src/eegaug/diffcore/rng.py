"""Deterministic, splittable random streams.

Every stochastic operation in the package draws from an explicitly passed
stream. Streams are counter-based (Philox) and keyed by a root seed plus a
path of labels, so independent components get independent, reproducible
streams regardless of execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _path_key(parts):
    h = hashlib.sha256()
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")


def stream(seed, *path):
    """A fresh Generator for (seed, path); identical arguments give identical streams."""
    key = np.array([np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(_path_key(path))], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
