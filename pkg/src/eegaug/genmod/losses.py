"""Training objectives for the VAE and WGAN families.

All losses are minimization objectives returning scalar tensors. The VAE
objective is the negated evidence bound: squared reconstruction error plus
the closed-form KL against a standard normal. The critic objective is the
negated Wasserstein surrogate plus the gradient penalty, whose inner input
gradient stays differentiable so critic updates see the full second-order
path.
"""

from __future__ import annotations

import numpy as np

from .. import diffcore as dc
from ..diffcore import Tensor
from .mlp import mlp_forward


def _as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return dc.const(np.asarray(x, dtype=dtype or np.float64))


def kl_diag_gaussian(mu, log_sigma_sq):
    """KL(N(mu, diag(exp(log_sigma_sq))) || N(0, I)).

    0.5 * sum_k[exp(log_var) + mu^2 - 1 - log_var] per row; rows are
    averaged when the inputs are matrices.
    """
    mu = _as_tensor(mu)
    log_var = _as_tensor(log_sigma_sq)
    if mu.shape != log_var.shape:
        raise dc.ShapeMismatch(f"mu {mu.shape} vs log variance {log_var.shape}")
    term = dc.sub(dc.sub(dc.add(dc.exp(log_var), dc.square(mu)),
                         dc.const(np.ones(mu.shape, dtype=mu.dtype))), log_var)
    if mu.data.ndim <= 1:
        return dc.scale(dc.tsum(term), 0.5)
    return dc.scale(dc.tmean(dc.tsum(term, axis=1)), 0.5)


def encode(model, x, labels=None):
    """Run the encoder; returns (mu, log_var) tensors."""
    x = _as_tensor(x)
    if model.conditional:
        if labels is None:
            raise ValueError("conditional encoder needs labels")
        x = dc.concat([x, dc.one_hot(labels, model.n_classes, x.dtype)], axis=1)
    h = mlp_forward(model.encoder_spec, model.params, x, "e_")
    mu = dc.slice_axis(h, 1, 0, model.latent_dim)
    log_var = dc.slice_axis(h, 1, model.latent_dim, 2 * model.latent_dim)
    return mu, log_var


def decode(model, z, labels=None):
    z = _as_tensor(z)
    if model.conditional:
        if labels is None:
            raise ValueError("conditional decoder needs labels")
        z = dc.concat([z, dc.one_hot(labels, model.n_classes, z.dtype)], axis=1)
    return mlp_forward(model.decoder_spec, model.params, z, "d_")


def vae_loss(model, batch, stream):
    """Mean over the batch of squared reconstruction error plus KL."""
    if model.conditional:
        raise ValueError("model is conditional; use cvae_loss")
    return _vae_loss(model, batch, None, stream)


def cvae_loss(model, batch, labels, stream):
    """vae_loss with a one-hot label joined to the encoder input and latent."""
    if not model.conditional:
        raise ValueError("model is unconditional; use vae_loss")
    return _vae_loss(model, batch, labels, stream)


def _vae_loss(model, batch, labels, stream):
    x = _as_tensor(batch)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[1] != model.data_dim:
        raise dc.ShapeMismatch(f"batch dim {x.shape[1]} != decoder output "
                               f"{model.data_dim}")
    mu, log_var = encode(model, x, labels)
    z = dc.gaussian_sample(mu, log_var, stream)
    recon = decode(model, z, labels)
    sq_err = dc.tmean(dc.tsum(dc.square(dc.sub(x, recon)), axis=1))
    return dc.add(sq_err, kl_diag_gaussian(mu, log_var))


def interpolate(x_r, x_g, alpha):
    """Points on the straight lines alpha*x_r + (1-alpha)*x_g, alpha per row."""
    x_r, x_g = _as_tensor(x_r), _as_tensor(x_g)
    if x_r.shape != x_g.shape:
        raise dc.ShapeMismatch(f"endpoints {x_r.shape} vs {x_g.shape}")
    alpha = np.asarray(alpha, dtype=x_r.dtype).reshape(-1, 1)
    if alpha.shape[0] != x_r.shape[0]:
        raise dc.ShapeMismatch("one alpha per row required")
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise ValueError("alpha must lie in [0, 1]")
    a = dc.const(alpha)
    return dc.add(dc.mul(a, x_r), dc.mul(dc.const(1.0 - alpha), x_g))


def critic_score(model, x, labels=None):
    """Critic output column for a batch (conditional when labels given)."""
    x = _as_tensor(x)
    if model.conditional:
        if labels is None:
            raise ValueError("conditional critic needs labels")
        x = dc.concat([x, dc.one_hot(labels, model.n_classes, x.dtype)], axis=1)
    return mlp_forward(model.critic_spec, model.params, x, "d_")


def generate(model, noise, labels=None):
    z = _as_tensor(noise)
    if model.conditional:
        if labels is None:
            raise ValueError("conditional generator needs labels")
        z = dc.concat([z, dc.one_hot(labels, model.n_classes, z.dtype)], axis=1)
    return mlp_forward(model.gen_spec, model.params, z, "g_")


def gradient_penalty(critic_fn, x_hat, lambda_gp=10.0):
    """lambda * mean((||d critic / d x_hat||_2 - 1)^2).

    critic_fn maps a Tensor batch to a critic score column; the penalty is
    differentiable with respect to anything critic_fn depends on.
    """
    score = dc.tsum(critic_fn(x_hat))
    grad_x = dc.input_gradient(score, x_hat)
    norms = dc.norm_rows(grad_x)
    return dc.scale(dc.tmean(dc.square(dc.shift(norms, -1.0))), lambda_gp)


def critic_loss(model, real, fake, labels=None, alpha=None, stream=None):
    """mean D(fake) - mean D(real) + gradient penalty on line interpolates.

    alpha may be passed explicitly (one value per row in [0, 1]); otherwise
    it is drawn uniformly from the stream.
    """
    real, fake = _as_tensor(real), _as_tensor(fake)
    if real.shape != fake.shape:
        raise dc.ShapeMismatch(f"real {real.shape} vs fake {fake.shape}")
    if real.shape[0] < 2:
        raise ValueError("critic loss needs a batch of at least 2 rows")
    if model.conditional and labels is None:
        raise ValueError("conditional critic needs labels")
    if alpha is None:
        if stream is None:
            raise ValueError("provide alpha or a stream to draw it from")
        alpha = stream.uniform(0.0, 1.0, size=real.shape[0])
    x_hat = interpolate(real, fake, alpha)
    penalty = gradient_penalty(lambda xh: critic_score(model, xh, labels),
                               x_hat, model.lambda_gp)
    # one critic pass over real|fake stacked, split afterwards
    n = real.shape[0]
    both = dc.concat([real, fake], axis=0)
    both_labels = None if labels is None else np.concatenate([labels, labels])
    scores = critic_score(model, both, both_labels)
    wass = dc.sub(dc.tmean(dc.slice_axis(scores, 0, n, 2 * n)),
                  dc.tmean(dc.slice_axis(scores, 0, 0, n)))
    return dc.add(wass, penalty)


def generator_loss(model, noise, labels=None):
    """-mean D(G(z)); the generator climbs the critic."""
    noise = _as_tensor(noise)
    if noise.shape[1] != model.noise_dim:
        raise dc.ShapeMismatch(f"noise dim {noise.shape[1]} != {model.noise_dim}")
    fake = generate(model, noise, labels)
    return dc.scale(dc.tmean(critic_score(model, fake, labels)), -1.0)
