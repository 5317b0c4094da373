"""Generator/discriminator pair, minimax losses, and the training loop.

Both players are plain MLPs from :mod:`collabgan.nn`. Losses clamp
discriminator outputs to [SCORE_CLAMP, 1 - SCORE_CLAMP] before any log;
gradients are injected at the final pre-activation (logit) instead, which
is the numerically stable equivalent and never saturates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mixture import MixtureSpec, sample_mixture
from .nn import (
    AdamState,
    ContractViolation,
    MlpModel,
    adam_step,
    glorot_init,
    mlp_backward,
    mlp_forward,
)

SCORE_CLAMP = 1e-7


class TrainingDiverged(RuntimeError):
    """Raised when a loss turns non-finite during training."""


def clamp_scores(scores: np.ndarray) -> np.ndarray:
    return np.clip(scores, SCORE_CLAMP, 1.0 - SCORE_CLAMP)


def discriminator_scores(D: MlpModel, batch) -> np.ndarray:
    """Clamped D outputs as a flat vector, one score per row."""
    return clamp_scores(mlp_forward(D, batch).output[:, 0])


@dataclass
class GanPair:
    """A generator (latent -> 2-D data) and discriminator (2-D data -> score)."""

    generator: MlpModel
    discriminator: MlpModel
    latent_dim: int

    def __post_init__(self):
        if self.generator.input_dim != self.latent_dim:
            raise ContractViolation("generator input width must equal latent_dim")
        if self.generator.output_dim != self.discriminator.input_dim:
            raise ContractViolation("generator output width must match discriminator input")
        if self.discriminator.output_dim != 1:
            raise ContractViolation("discriminator must produce one score per sample")
        if self.discriminator.layers[-1].activation != "sigmoid":
            raise ContractViolation("discriminator output activation must be sigmoid")

    def copy(self) -> "GanPair":
        return GanPair(self.generator.copy(), self.discriminator.copy(), self.latent_dim)


def build_gan_pair(
    rng: np.random.Generator,
    latent_dim: int = 2,
    data_dim: int = 2,
    hidden_units: int = 64,
    hidden_layers: int = 6,
) -> GanPair:
    """Fresh Glorot-initialized pair; hidden layers are LeakyReLU(0.2)."""
    g_dims = [latent_dim] + [hidden_units] * hidden_layers + [data_dim]
    d_dims = [data_dim] + [hidden_units] * hidden_layers + [1]
    g_acts = ["leaky_relu"] * hidden_layers + ["identity"]
    d_acts = ["leaky_relu"] * hidden_layers + ["sigmoid"]
    return GanPair(
        generator=glorot_init(g_dims, g_acts, rng),
        discriminator=glorot_init(d_dims, d_acts, rng),
        latent_dim=latent_dim,
    )


@dataclass
class TrainConfig:
    iterations: int = 9000
    batch_size: int = 128
    d_steps_per_g_step: int = 1
    g_learning_rate: float = 1e-4
    d_learning_rate: float = 1e-4
    latent_dim: int = 2
    hidden_units: int = 64
    hidden_layers: int = 6
    checkpoint_schedule: list[int] = field(default_factory=lambda: [1000, 9000])
    seed: int = 0

    def validate(self) -> None:
        if self.iterations < 0 or self.batch_size <= 0 or self.d_steps_per_g_step <= 0:
            raise ContractViolation("iterations/batch_size/d_steps must be positive")
        if self.g_learning_rate <= 0 or self.d_learning_rate <= 0:
            raise ContractViolation("learning rates must be positive")
        if self.latent_dim <= 0 or self.hidden_units <= 0 or self.hidden_layers <= 0:
            raise ContractViolation("architecture sizes must be positive")
        if any(c < 0 or c > self.iterations for c in self.checkpoint_schedule):
            raise ContractViolation("checkpoint indices must lie in [0, iterations]")


def propose_samples(
    G: MlpModel, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw standard-normal latents and push them through the generator.

    Returns (latents, samples) so refinement can restart from any layer.
    """
    if n < 0:
        raise ContractViolation("n must be non-negative")
    latents = rng.standard_normal((n, G.input_dim))
    return latents, mlp_forward(G, latents).output


def d_loss(D: MlpModel, real, fake) -> float:
    """Discriminator minimization objective -E[log D(real)] - E[log(1 - D(fake))]."""
    real = np.asarray(real)
    fake = np.asarray(fake)
    if real.shape[0] == 0 or fake.shape[0] == 0:
        raise ContractViolation("d_loss requires nonempty real and fake batches")
    sr = discriminator_scores(D, real)
    sf = discriminator_scores(D, fake)
    return float(-np.mean(np.log(sr)) - np.mean(np.log(1.0 - sf)))


def g_loss_ns(D: MlpModel, fake) -> float:
    """Non-saturating generator objective -E[log D(fake)]."""
    fake = np.asarray(fake)
    if fake.shape[0] == 0:
        raise ContractViolation("g_loss_ns requires a nonempty batch")
    return float(-np.mean(np.log(discriminator_scores(D, fake))))


def d_loss_gradients(D: MlpModel, real, fake):
    """Parameter gradients of d_loss, seeded at the logit for stability.

    d(-log sigmoid(f))/df = s - 1 on real rows; d(-log(1 - sigmoid(f)))/df = s
    on fake rows, each averaged over its own batch.
    """
    tr_real = mlp_forward(D, real)
    tr_fake = mlp_forward(D, fake)
    s_real = tr_real.output
    s_fake = tr_fake.output
    g_real = (s_real - 1.0) / real.shape[0]
    g_fake = s_fake / fake.shape[0]
    grads_r, _ = mlp_backward(tr_real, g_real, grad_at_final_pre_activation=True)
    grads_f, _ = mlp_backward(tr_fake, g_fake, grad_at_final_pre_activation=True)
    return [(gw1 + gw2, gb1 + gb2) for (gw1, gb1), (gw2, gb2) in zip(grads_r, grads_f)]


def g_loss_gradients(G: MlpModel, D: MlpModel, latents):
    """Parameter gradients of g_loss_ns wrt the generator, D frozen."""
    tr_g = mlp_forward(G, latents)
    tr_d = mlp_forward(D, tr_g.output)
    seed = (tr_d.output - 1.0) / latents.shape[0]  # d(-mean log D)/d logit
    _, dx = mlp_backward(tr_d, seed, grad_at_final_pre_activation=True)
    grads, _ = mlp_backward(tr_g, dx)
    return grads


def train_gan(
    cfg: TrainConfig,
    mixture: MixtureSpec,
    rng: np.random.Generator | None = None,
) -> tuple[list[tuple[int, GanPair]], list[tuple[int, float, float]]]:
    """Alternating Adam updates on D and G against the mixture benchmark.

    Returns (checkpoints, log) where checkpoints are deep-copied pairs taken
    at the scheduled iterations and log rows are (iteration, d_loss, g_loss).
    """
    cfg.validate()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    pair = build_gan_pair(
        rng,
        latent_dim=cfg.latent_dim,
        hidden_units=cfg.hidden_units,
        hidden_layers=cfg.hidden_layers,
    )
    d_state = AdamState.for_model(pair.discriminator, learning_rate=cfg.d_learning_rate)
    g_state = AdamState.for_model(pair.generator, learning_rate=cfg.g_learning_rate)

    checkpoints: list[tuple[int, GanPair]] = []
    log: list[tuple[int, float, float]] = []
    wanted = set(cfg.checkpoint_schedule)
    if 0 in wanted:
        checkpoints.append((0, pair.copy()))

    for it in range(1, cfg.iterations + 1):
        for _ in range(cfg.d_steps_per_g_step):
            real = sample_mixture(mixture, cfg.batch_size, rng)
            _, fake = propose_samples(pair.generator, cfg.batch_size, rng)
            adam_step(pair.discriminator, d_loss_gradients(pair.discriminator, real, fake), d_state)
        latents, fake = propose_samples(pair.generator, cfg.batch_size, rng)
        adam_step(pair.generator, g_loss_gradients(pair.generator, pair.discriminator, latents), g_state)

        dl = d_loss(pair.discriminator, real, fake)
        gl = g_loss_ns(pair.discriminator, mlp_forward(pair.generator, latents).output)
        if not (np.isfinite(dl) and np.isfinite(gl)):
            raise TrainingDiverged(f"non-finite loss at iteration {it}: d={dl} g={gl}")
        log.append((it, dl, gl))
        if it in wanted:
            checkpoints.append((it, pair.copy()))

    checkpoints.sort(key=lambda c: c[0])
    return checkpoints, log
