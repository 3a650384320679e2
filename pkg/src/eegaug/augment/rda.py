"""Rotational augmentation: spin the cap about the z-axis and re-interpolate.

Per band, the per-channel values of each source row define a scattered field
over the electrode positions; a Gaussian RBF interpolant with a constant
polynomial tail is fitted once and evaluated at the rotated positions. The
constant tail makes constant fields exact, and the kernel width (a fraction
of the median pairwise electrode distance) keeps the system well conditioned
so fitting is an exact solve, which makes the zero-angle rotation an
identity at the nodes.
"""

from __future__ import annotations

import numpy as np

from .montage import rotate_z
from .plans import ProvenanceRow

SHAPE_FACTOR = 0.25


def _pairwise(a, b):
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)


def interpolation_operator(montage, angle_deg, shape_factor=SHAPE_FACTOR):
    """Linear map M such that new_values = values @ M.T for one band."""
    coords = montage.coords
    n = montage.n_channels
    d = _pairwise(coords, coords)
    shape = shape_factor * np.median(d[np.triu_indices(n, 1)])
    system = np.zeros((n + 1, n + 1))
    system[:n, :n] = np.exp(-(d / shape) ** 2)
    system[:n, n] = 1.0
    system[n, :n] = 1.0
    rotated = rotate_z(coords, angle_deg)
    bd = _pairwise(rotated, coords)
    basis = np.concatenate([np.exp(-(bd / shape) ** 2), np.ones((n, 1))], axis=1)
    inv = np.linalg.solve(system, np.eye(n + 1))
    return basis @ inv[:, :n]


def rda_augment(dataset, montage, angle_deg, n, stream, shape_factor=SHAPE_FACTOR,
                angle_range=None, seed=0):
    """n rotated rows sampled (with replacement) from the dataset.

    angle_range=(low, high) draws a fresh angle per sample instead of the
    fixed angle_deg. Band b of the output depends only on band b of the
    input. Returns (rows, labels, provenance).
    """
    fm = dataset.features
    if montage.n_channels != fm.n_channels:
        raise ValueError(f"montage has {montage.n_channels} electrodes, data has "
                         f"{fm.n_channels} channels")
    if not -180.0 <= angle_deg <= 180.0:
        raise ValueError("angle must lie in [-180, 180] degrees")
    if n == 0:
        return (np.zeros((0, fm.dim)), np.zeros(0, dtype=np.uint32), [])
    if dataset.n_samples == 0:
        raise ValueError("cannot augment an empty dataset")

    src = stream.integers(0, dataset.n_samples, size=n)
    if angle_range is None:
        angles = np.full(n, float(angle_deg))
    else:
        low, high = angle_range
        angles = stream.uniform(low, high, size=n)

    x = np.asarray(dataset.x, dtype=np.float64)
    out = np.empty((n, fm.dim))
    # group rows by angle so the operator is built once per distinct angle
    for angle in np.unique(angles):
        rows = np.flatnonzero(angles == angle)
        op_t = interpolation_operator(montage, angle, shape_factor).T
        for b in range(fm.n_bands):
            cols = fm.band_block(b)
            out[np.ix_(rows, cols)] = x[np.ix_(src[rows], cols)] @ op_t
    labels = dataset.labels[src].copy()
    prov = [ProvenanceRow("rda", 0, int(s), int(l), None, seed)
            for s, l in zip(src, labels)]
    return out, labels, prov
