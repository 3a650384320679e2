"""eegaug: generative augmentation and evaluation for spectral feature vectors."""

__version__ = "0.1.0"
