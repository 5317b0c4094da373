"""Gradient-based sample refinement at a chosen generator layer.

After training, the frozen discriminator scores a proposed sample and its
gradient nudges the activation at generator layer ``l``; the generator tail
re-projects the activation to data space. Iterating shifts samples toward
regions the discriminator considers more real. ``l == L + 1`` refines in
data space directly (no generator tail).

Models are read-only here; disjoint batches may be refined concurrently
against shared frozen models.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .gan import clamp_scores, discriminator_scores
from .nn import ContractViolation, MlpModel, forward_from, input_gradient, mlp_forward

DIVERGENCE_LIMIT = 1e6


class Termination(enum.Enum):
    THRESHOLD_MET = "threshold_met"
    MAX_STEPS = "max_steps"
    PROBABILISTIC_STOP = "probabilistic_stop"
    DIVERGED = "diverged"


@dataclass
class RefinementConfig:
    """Knobs of the refinement loop.

    ``layer_index`` is 1-based; ``num_layers + 1`` selects data-space
    refinement. ``stop_prob`` only applies with probabilistic termination,
    which trades sample quality for support coverage by halting each sample
    at every step with that probability.
    """

    layer_index: int
    step_size: float = 0.1
    max_steps: int = 50
    threshold: float = 0.5
    probabilistic: bool = False
    stop_prob: float = 0.1

    def validate(self, G: MlpModel | None = None) -> None:
        if self.step_size <= 0:
            raise ContractViolation("step size must be positive")
        if self.max_steps < 0:
            raise ContractViolation("max_steps must be non-negative")
        if not 0.0 < self.threshold < 1.0:
            raise ContractViolation("threshold must lie in (0, 1)")
        if self.probabilistic and not 0.0 < self.stop_prob <= 1.0:
            raise ContractViolation("stop_prob must lie in (0, 1]")
        if G is not None and not 1 <= self.layer_index <= G.num_layers + 1:
            raise ContractViolation(
                f"layer_index {self.layer_index} out of range 1..{G.num_layers + 1}"
            )


@dataclass
class RefinementTrace:
    """Per-sample provenance of one refinement run."""

    step_count: int
    initial_score: float
    final_score: float
    initial_point: np.ndarray
    final_point: np.ndarray
    final_activation: np.ndarray
    reason: Termination
    diverged: bool = False


def compute_threshold(D: MlpModel, reals) -> float:
    """Median discriminator output on real samples (mean of middle pair when even)."""
    reals = np.asarray(reals)
    if reals.shape[0] == 0:
        raise ContractViolation("compute_threshold requires a nonempty real batch")
    return float(np.median(discriminator_scores(D, reals)))


def grad_wrt_activation(G: MlpModel, D: MlpModel, layer_index: int, x_l) -> np.ndarray:
    """Gradient of -mean(log D(tail(x_l))) with respect to the activation x_l.

    The gradient is seeded at the discriminator logit (s - 1 per row, averaged
    over the batch) and pulled back through D, then through generator layers
    layer_index..L.
    """
    x_l = np.asarray(x_l, dtype=np.float64)
    g = _per_sample_gradient(G, D, layer_index, x_l)[1]
    return g / max(1, x_l.shape[0])


def _per_sample_gradient(
    G: MlpModel, D: MlpModel, layer_index: int, x_l: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(data_points, sum-loss gradient rows, scores). Rows are independent, so
    each gradient row equals the single-sample gradient of -log D."""
    tail = forward_from(G, layer_index, x_l)
    tr_d = mlp_forward(D, tail.output)
    scores = tr_d.output
    seed = scores - 1.0  # d(-log sigmoid(f))/df, per sample
    dx = input_gradient(tr_d, seed, grad_at_final_pre_activation=True)
    g = input_gradient(tail, dx) if layer_index <= G.num_layers else dx
    return tail.output, g, clamp_scores(scores[:, 0])


def refine_batch(
    G: MlpModel,
    D: MlpModel,
    cfg: RefinementConfig,
    latents,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, list[RefinementTrace]]:
    """Iteratively refine proposed samples; each row stops independently.

    Per step and per still-active sample: stop when the score reaches the
    threshold; under probabilistic termination additionally stop with
    ``stop_prob``; otherwise take one gradient step on the layer activation
    and re-project through the generator tail. The per-sample update uses the
    single-sample gradient of -log D (batch means rescaled), so step sizes do
    not depend on how many samples happen to share a batch.

    Returns the refined data-space batch plus one trace per sample. Samples
    whose activations go non-finite (or exceed 1e6 in magnitude) are frozen
    at their last valid state and flagged.
    """
    cfg.validate(G)
    if cfg.probabilistic and rng is None:
        raise ContractViolation("probabilistic termination needs an rng")
    latents = np.asarray(latents, dtype=np.float64)
    trace = mlp_forward(G, latents)
    l = cfg.layer_index
    x_l = trace.activations[l - 1].copy()
    x = trace.output.copy()
    scores = discriminator_scores(D, x)

    n = latents.shape[0]
    initial_scores = scores.copy()
    initial_points = x.copy()
    steps = np.zeros(n, dtype=np.int64)
    reasons = np.full(n, Termination.MAX_STEPS, dtype=object)
    diverged = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)

    for _ in range(cfg.max_steps):
        if not active.any():
            break
        met = active & (scores >= cfg.threshold)
        reasons[met] = Termination.THRESHOLD_MET
        active &= ~met
        if cfg.probabilistic and active.any():
            stop = active & (rng.random(n) < cfg.stop_prob)
            reasons[stop] = Termination.PROBABILISTIC_STOP
            active &= ~stop
        if not active.any():
            break

        idx = np.flatnonzero(active)
        _, g, _ = _per_sample_gradient(G, D, l, x_l[idx])
        new_xl = x_l[idx] - cfg.step_size * g
        new_x = (
            forward_from(G, l, new_xl).output if l <= G.num_layers else new_xl
        )
        bad = ~np.isfinite(new_xl).all(axis=1) | (np.abs(new_xl).max(axis=1) > DIVERGENCE_LIMIT)
        bad |= ~np.isfinite(new_x).all(axis=1)
        ok = idx[~bad]
        if ok.size:
            x_l[ok] = new_xl[~bad]
            x[ok] = new_x[~bad]
            steps[ok] += 1
            scores[ok] = discriminator_scores(D, x[ok])  # post-update score recorded
        frozen = idx[bad]
        if frozen.size:
            diverged[frozen] = True
            reasons[frozen] = Termination.DIVERGED
            active[frozen] = False

    traces = [
        RefinementTrace(
            step_count=int(steps[i]),
            initial_score=float(initial_scores[i]),
            final_score=float(scores[i]),
            initial_point=initial_points[i].copy(),
            final_point=x[i].copy(),
            final_activation=x_l[i].copy(),
            reason=reasons[i],
            diverged=bool(diverged[i]),
        )
        for i in range(n)
    ]
    return x, traces
