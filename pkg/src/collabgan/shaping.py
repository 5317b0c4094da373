"""Discriminator shaping: fine-tune D against the refined sample distribution.

The generator is frozen throughout. Each iteration draws a batch of refined
samples with the *current* discriminator (sampling and shaping alternate),
draws a real batch, and applies one Adam step on the same objective the GAN
training uses for D, with refined samples standing in for raw fakes. The
refinement threshold tracks the shifting discriminator: it is recomputed
from a fresh real batch every ``threshold_refresh_every`` iterations.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .gan import TrainingDiverged, d_loss, d_loss_gradients, discriminator_scores, propose_samples
from .mixture import MixtureSpec, sample_mixture
from .nn import AdamState, ContractViolation, MlpModel, adam_step
from .refine import RefinementConfig, compute_threshold, refine_batch


@dataclass
class ShapingConfig:
    iterations: int = 5000
    batch_size: int = 128
    learning_rate: float = 1e-4
    refinement: RefinementConfig = field(
        default_factory=lambda: RefinementConfig(layer_index=8, step_size=0.1, max_steps=50)
    )
    threshold_refresh_every: int = 500
    checkpoint_schedule: list[int] = field(default_factory=lambda: list(range(0, 5001, 500)))
    seed: int = 0

    def validate(self) -> None:
        if self.iterations < 0 or self.batch_size <= 0:
            raise ContractViolation("iterations must be >= 0 and batch_size positive")
        if self.learning_rate <= 0:
            raise ContractViolation("learning rate must be positive")
        if self.threshold_refresh_every <= 0:
            raise ContractViolation("threshold refresh period must be positive")
        if any(c < 0 or c > self.iterations for c in self.checkpoint_schedule):
            raise ContractViolation("checkpoint indices must lie in [0, iterations]")
        self.refinement.validate()


def shape_discriminator(
    G: MlpModel,
    D: MlpModel,
    cfg: ShapingConfig,
    mixture: MixtureSpec,
    rng: np.random.Generator | None = None,
) -> tuple[list[tuple[int, MlpModel]], list[tuple[int, float, float, float]]]:
    """Fine-tune ``D`` on (real, refined) batches; ``G`` is never touched.

    Returns (checkpoints, log): checkpoints are deep copies of D at the
    scheduled iterations (0 means the untouched input), log rows are
    (iteration, shaping_loss, mean D(real), mean D(refined)).
    """
    cfg.validate()
    cfg.refinement.validate(G)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    D = D.copy()
    state = AdamState.for_model(D, learning_rate=cfg.learning_rate)
    checkpoints: list[tuple[int, MlpModel]] = []
    log: list[tuple[int, float, float, float]] = []
    wanted = set(cfg.checkpoint_schedule)
    if 0 in wanted:
        checkpoints.append((0, D.copy()))

    ref_cfg = dataclasses.replace(cfg.refinement)
    for it in range(1, cfg.iterations + 1):
        if (it - 1) % cfg.threshold_refresh_every == 0:
            ref_cfg.threshold = compute_threshold(D, sample_mixture(mixture, cfg.batch_size, rng))
        latents, _ = propose_samples(G, cfg.batch_size, rng)
        refined, _ = refine_batch(G, D, ref_cfg, latents, rng)
        real = sample_mixture(mixture, cfg.batch_size, rng)
        loss = d_loss(D, real, refined)
        if not np.isfinite(loss):
            raise TrainingDiverged(f"non-finite shaping loss at iteration {it}")
        mean_real = float(np.mean(discriminator_scores(D, real)))
        mean_refined = float(np.mean(discriminator_scores(D, refined)))
        adam_step(D, d_loss_gradients(D, real, refined), state)
        log.append((it, loss, mean_real, mean_refined))
        if it in wanted:
            checkpoints.append((it, D.copy()))

    checkpoints.sort(key=lambda c: c[0])
    return checkpoints, log
