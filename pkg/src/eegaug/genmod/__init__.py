"""Generative models: VAE, conditional VAE, WGAN-GP and conditional WGAN."""

from .checkpoint import (Checkpoint, checkpoint_bytes, checkpoint_from_bytes,
                         load_checkpoint, load_model, save_checkpoint, save_model)
from .losses import (critic_loss, critic_score, cvae_loss, decode, encode,
                     generate, generator_loss, gradient_penalty, interpolate,
                     kl_diag_gaussian, vae_loss)
from .mlp import MlpSpec, init_mlp, mlp_forward
from .models import (GanModel, TrainConfig, VaeModel, build_gan, build_vae,
                     default_latent_dim, gan_config, vae_config)
from .train import TrainingDiverged, sample, sample_features, train

__all__ = [
    "Checkpoint", "GanModel", "MlpSpec", "TrainConfig", "TrainingDiverged",
    "VaeModel", "build_gan", "build_vae", "checkpoint_bytes",
    "checkpoint_from_bytes", "critic_loss", "critic_score", "cvae_loss",
    "decode", "default_latent_dim", "encode", "gan_config", "generate",
    "generator_loss", "gradient_penalty", "init_mlp", "interpolate",
    "kl_diag_gaussian", "load_checkpoint", "load_model", "mlp_forward",
    "sample", "sample_features", "save_checkpoint", "save_model", "train",
    "vae_config", "vae_loss",
]
