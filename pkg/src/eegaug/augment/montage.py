"""Electrode montages: unit-sphere coordinate tables and rotations."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np


@dataclass
class Montage:
    names: tuple
    coords: np.ndarray  # (n, 3) unit vectors

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if len(self.names) != len(set(self.names)):
            raise ValueError("electrode names must be unique")
        if self.coords.shape != (len(self.names), 3):
            raise ValueError("one 3-D coordinate per electrode required")
        norms = np.linalg.norm(self.coords, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("electrode coordinates must lie on the unit sphere")

    @property
    def n_channels(self):
        return len(self.names)


def _parse_montage(text):
    names, coords = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("name"):
            continue
        name, x, y, z = line.split(",")
        names.append(name)
        coords.append([float(x), float(y), float(z)])
    return Montage(tuple(names), np.array(coords))


def load_montage(which):
    """Bundled montage by name ('seed62' / 'deap32') or channel count."""
    aliases = {"seed62": "montage_seed62.csv", 62: "montage_seed62.csv",
               "deap32": "montage_deap32.csv", 32: "montage_deap32.csv"}
    if which not in aliases:
        raise ValueError(f"no bundled montage for {which!r}")
    text = resources.files("eegaug.augment").joinpath(
        f"data/{aliases[which]}").read_text()
    return _parse_montage(text)


def rotation_z(angle_deg):
    t = np.radians(angle_deg)
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_z(coords, angle_deg):
    return np.asarray(coords) @ rotation_z(angle_deg).T
