"""Model containers and factory functions for the four generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataio import NormStats
from .mlp import MlpSpec, init_mlp

DEFAULT_HIDDEN = (256, 256, 256)


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int = 32
    lr: float = 1e-4
    beta1: float = 0.0
    beta2: float = 0.9
    seed: int = 0
    precision: str = "f32"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.precision not in ("f32", "f64"):
            raise ValueError("precision must be f32 or f64")

    @property
    def dtype(self):
        return np.float32 if self.precision == "f32" else np.float64


def gan_config(seed=0, epochs=300, **kw):
    """WGAN-family defaults: Adam(lr 1e-4, betas 0.0/0.9)."""
    return TrainConfig(epochs=epochs, lr=kw.pop("lr", 1e-4),
                       beta1=kw.pop("beta1", 0.0), beta2=kw.pop("beta2", 0.9),
                       seed=seed, **kw)


def vae_config(seed=0, epochs=200, **kw):
    """VAE-family defaults: Adam(lr 1e-3, betas 0.9/0.999)."""
    return TrainConfig(epochs=epochs, lr=kw.pop("lr", 1e-3),
                       beta1=kw.pop("beta1", 0.9), beta2=kw.pop("beta2", 0.999),
                       seed=seed, **kw)


def default_latent_dim(data_dim):
    """64 for wide (SEED-like) feature vectors, 32 for narrow (DEAP-like)."""
    return 64 if data_dim >= 256 else 32


@dataclass
class VaeModel:
    """Encoder producing (mu, log-variance), decoder back to data space.

    n_classes > 0 makes it conditional: a one-hot label joins the encoder
    input and the latent code.
    """

    data_dim: int
    latent_dim: int
    n_classes: int
    encoder_spec: MlpSpec
    decoder_spec: MlpSpec
    params: dict
    norm: NormStats | None = None
    meta: dict = field(default_factory=dict)

    @property
    def conditional(self):
        return self.n_classes > 0

    @property
    def kind(self):
        return "cvae" if self.conditional else "vae"


@dataclass
class GanModel:
    """Wasserstein generator/critic pair with gradient-penalty training.

    The critic ends in a single unconstrained scalar. n_classes > 0 makes
    both nets conditional through one-hot concatenation.
    """

    data_dim: int
    noise_dim: int
    n_classes: int
    gen_spec: MlpSpec
    critic_spec: MlpSpec
    params: dict
    lambda_gp: float = 10.0
    n_critic: int = 5
    norm: NormStats | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lambda_gp <= 0:
            raise ValueError("lambda_gp must be positive")
        if self.critic_spec.out_dim != 1:
            raise ValueError("critic must output a single scalar")

    @property
    def conditional(self):
        return self.n_classes > 0

    @property
    def kind(self):
        return "cwgan" if self.conditional else "wgan"

    def gen_params(self):
        return {k: v for k, v in self.params.items() if k.startswith("g_")}

    def critic_params(self):
        return {k: v for k, v in self.params.items() if k.startswith("d_")}


def build_vae(data_dim, rng, latent_dim=None, n_classes=0, hidden=DEFAULT_HIDDEN,
              dtype=np.float32):
    latent_dim = latent_dim or default_latent_dim(data_dim)
    enc_in = data_dim + n_classes
    dec_in = latent_dim + n_classes
    encoder = MlpSpec((enc_in, *hidden, 2 * latent_dim))
    decoder = MlpSpec((dec_in, *hidden, data_dim))
    params = init_mlp(encoder, rng, "e_", dtype)
    params.update(init_mlp(decoder, rng, "d_", dtype))
    return VaeModel(data_dim, latent_dim, n_classes, encoder, decoder, params)


def build_gan(data_dim, rng, noise_dim=None, n_classes=0, hidden=DEFAULT_HIDDEN,
              lambda_gp=10.0, n_critic=5, dtype=np.float32):
    noise_dim = noise_dim or default_latent_dim(data_dim)
    gen = MlpSpec((noise_dim + n_classes, *hidden, data_dim))
    critic = MlpSpec((data_dim + n_classes, *hidden, 1))
    params = init_mlp(gen, rng, "g_", dtype)
    params.update(init_mlp(critic, rng, "d_", dtype))
    return GanModel(data_dim, noise_dim, n_classes, gen, critic, params,
                    lambda_gp=lambda_gp, n_critic=n_critic)
