"""Augmentation strategies: full usage, selective filtering, noise, rotation."""

from .methods import augment_full, gaussian_augment, uniform_mix
from .montage import Montage, load_montage, rotate_z, rotation_z
from .plans import (DEFAULT_COUNTS, METHODS, SELECTIVE_METHODS,
                    AugmentationPlan, ProvenanceRow, read_sidecar, sidecar_csv)
from .rda import interpolation_operator, rda_augment
from .selective import (RoundsExhausted, augment_selective,
                        train_selective_generator)

__all__ = [
    "DEFAULT_COUNTS", "METHODS", "SELECTIVE_METHODS", "AugmentationPlan",
    "Montage", "ProvenanceRow", "RoundsExhausted", "augment_full",
    "augment_selective", "gaussian_augment", "interpolation_operator",
    "load_montage", "rda_augment", "read_sidecar", "rotate_z", "rotation_z",
    "sidecar_csv", "train_selective_generator", "uniform_mix",
]
