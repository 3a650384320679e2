"""Training loops and sampling for the generator families."""

from __future__ import annotations

import numpy as np

from .. import diffcore as dc
from ..dataio import normalize
from ..featx import FeatureMatrix
from . import losses
from .models import GanModel, VaeModel


class TrainingDiverged(RuntimeError):
    """A loss went non-finite; carries the epoch index."""

    def __init__(self, epoch, what):
        super().__init__(f"{what} became non-finite at epoch {epoch}")
        self.epoch = epoch


def _prepare(model, x, y, config, fit_norm):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training data must be a nonempty (n, dim) matrix")
    if model.conditional:
        if y is None:
            raise ValueError("conditional model needs labels")
        y = np.asarray(y)
        if y.shape != (x.shape[0],):
            raise ValueError("one label per training row required")
    if fit_norm:
        model.norm = normalize(x)
    if model.norm is not None:
        x = model.norm.transform(x)
    return x.astype(config.dtype), y


def _batches(n, batch_size, rng, min_size=1):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        chunk = order[start:start + batch_size]
        if chunk.size >= min_size:
            yield chunk


def train(model, x, y=None, config=None, fit_norm=True):
    """Fit a generator on rows x (labels y for conditional models).

    Features are z-scored with statistics fitted here and remembered on the
    model, so sampling returns rows in the original space. Deterministic
    given (data, config.seed). Returns a per-epoch loss trace.
    """
    if config is None:
        raise ValueError("a TrainConfig is required")
    if isinstance(model, VaeModel):
        return _train_vae(model, x, y, config, fit_norm)
    if isinstance(model, GanModel):
        return _train_gan(model, x, y, config, fit_norm)
    raise TypeError(f"unknown model type {type(model).__name__}")


def _train_vae(model, x, y, config, fit_norm):
    x, y = _prepare(model, x, y, config, fit_norm)
    shuffle = dc.stream(config.seed, "vae", "shuffle")
    noise = dc.stream(config.seed, "vae", "noise")
    state = dc.adam_init(model.params, lr=config.lr, beta1=config.beta1,
                         beta2=config.beta2)
    names = list(model.params)
    wrts = [model.params[k] for k in names]
    trace = []
    for epoch in range(config.epochs):
        epoch_losses = []
        for idx in _batches(x.shape[0], config.batch_size, shuffle):
            xb = dc.const(x[idx])
            if model.conditional:
                loss = losses.cvae_loss(model, xb, y[idx], noise)
            else:
                loss = losses.vae_loss(model, xb, noise)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(epoch, "VAE loss")
            grads = dc.gradients(loss, wrts)
            dc.adam_step(state, model.params,
                         {k: g.data for k, g in zip(names, grads)})
            epoch_losses.append(value)
        trace.append({"epoch": epoch, "loss": float(np.mean(epoch_losses))})
    return trace


def _train_gan(model, x, y, config, fit_norm):
    x, y = _prepare(model, x, y, config, fit_norm)
    shuffle = dc.stream(config.seed, "gan", "shuffle")
    noise = dc.stream(config.seed, "gan", "noise")
    alpha_rng = dc.stream(config.seed, "gan", "alpha")
    crit_names = sorted(model.critic_params())
    gen_names = sorted(model.gen_params())
    crit_state = dc.adam_init(model.critic_params(), lr=config.lr,
                              beta1=config.beta1, beta2=config.beta2)
    gen_state = dc.adam_init(model.gen_params(), lr=config.lr,
                             beta1=config.beta1, beta2=config.beta2)
    trace = []
    since_gen = 0
    for epoch in range(config.epochs):
        crit_losses, gen_losses = [], []
        for idx in _batches(x.shape[0], config.batch_size, shuffle, min_size=2):
            b = idx.size
            labels = y[idx] if model.conditional else None
            z = noise.standard_normal((b, model.noise_dim)).astype(config.dtype)
            fake = losses.generate(model, dc.const(z), labels).detach()
            loss = losses.critic_loss(model, dc.const(x[idx]), fake, labels,
                                      stream=alpha_rng)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(epoch, "critic loss")
            grads = dc.gradients(loss, [model.params[k] for k in crit_names])
            dc.adam_step(crit_state, model.critic_params(),
                         {k: g.data for k, g in zip(crit_names, grads)})
            crit_losses.append(value)

            since_gen += 1
            if since_gen >= model.n_critic:
                since_gen = 0
                z = noise.standard_normal((b, model.noise_dim)).astype(config.dtype)
                gloss = losses.generator_loss(model, dc.const(z), labels)
                gvalue = gloss.item()
                if not np.isfinite(gvalue):
                    raise TrainingDiverged(epoch, "generator loss")
                ggrads = dc.gradients(gloss, [model.params[k] for k in gen_names])
                dc.adam_step(gen_state, model.gen_params(),
                             {k: g.data for k, g in zip(gen_names, ggrads)})
                gen_losses.append(gvalue)
        trace.append({
            "epoch": epoch,
            "critic_loss": float(np.mean(crit_losses)) if crit_losses else 0.0,
            "generator_loss": float(np.mean(gen_losses)) if gen_losses else 0.0,
        })
    return trace


def sample(model, n, labels=None, stream=None):
    """Generate n rows in the model's original feature space.

    Conditional models need one label per row; unconditional models reject
    labels. The VAE family decodes standard-normal latents; the GAN family
    maps noise through the generator.
    """
    if stream is None:
        raise ValueError("a random stream is required")
    if model.conditional:
        if labels is None:
            raise ValueError("conditional model needs one label per sample")
        labels = np.asarray(labels)
        if labels.shape != (n,):
            raise ValueError(f"need {n} labels, got shape {labels.shape}")
    elif labels is not None:
        raise ValueError("unconditional model cannot take labels")

    dtype = next(iter(model.params.values())).dtype
    if n == 0:
        rows = np.zeros((0, model.data_dim))
        return rows if model.norm is None else model.norm.inverse(rows)
    if isinstance(model, VaeModel):
        z = stream.standard_normal((n, model.latent_dim)).astype(dtype)
        out = losses.decode(model, dc.const(z), labels)
    else:
        z = stream.standard_normal((n, model.noise_dim)).astype(dtype)
        out = losses.generate(model, dc.const(z), labels)
    rows = out.data.astype(np.float64)
    if model.norm is not None:
        rows = model.norm.inverse(rows)
    return rows


def sample_features(model, n, labels=None, stream=None):
    """sample() packed into a FeatureMatrix using layout metadata saved on
    the model (set when training came from a real feature file)."""
    rows = sample(model, n, labels=labels, stream=stream)
    meta = model.meta
    ch = meta.get("n_channels", 1)
    bands = meta.get("n_bands", model.data_dim if ch == 1 else model.data_dim // ch)
    return FeatureMatrix(rows.astype(np.float32), ch, bands,
                         meta.get("feature_kind", "de"))
