"""Accept-reject samplers: discriminator rejection sampling, MH independence
chains, and the post-refinement rejection chain.

All samplers work through two callables so they run identically against a
trained discriminator or the Bayes-optimal closed-form scorer:

* a proposer ``(n, rng) -> (n, d) samples``
* a score source ``samples -> scores in (0, 1)``

Chains are sequential by definition; independent chains with independent rng
streams may run in parallel. Score sources are read-only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gan import clamp_scores, discriminator_scores
from .mixture import MixtureSpec, mixture_pdf, sample_mixture
from .nn import ContractViolation, MlpModel

Proposer = Callable[[int, np.random.Generator], np.ndarray]
ScoreSource = Callable[[np.ndarray], np.ndarray]

DRS_PROPOSAL_BUDGET_FACTOR = 100


def mlp_proposer(G: MlpModel) -> Proposer:
    """Proposals from a trained generator under standard-normal latents."""

    def propose(n: int, rng: np.random.Generator) -> np.ndarray:
        from .gan import propose_samples

        return propose_samples(G, n, rng)[1]

    return propose


def mixture_proposer(spec: MixtureSpec) -> Proposer:
    return lambda n, rng: sample_mixture(spec, n, rng)


def mlp_score_source(D: MlpModel) -> ScoreSource:
    return lambda x: discriminator_scores(D, x)


def oracle_score_source(target: MixtureSpec, proposal: MixtureSpec) -> ScoreSource:
    """Bayes-optimal scorer D*(x) = p_target / (p_target + p_proposal)."""

    def score(x: np.ndarray) -> np.ndarray:
        pt = mixture_pdf(target, x)
        pp = mixture_pdf(proposal, x)
        return clamp_scores(pt / (pt + pp))

    return score


def density_ratio(score) -> np.ndarray | float:
    """Density ratio implied by an optimal discriminator score: D / (1 - D)."""
    s = clamp_scores(np.asarray(score, dtype=np.float64))
    out = s / (1.0 - s)
    return float(out) if out.ndim == 0 else out


def mh_acceptance(score_current, score_candidate) -> np.ndarray | float:
    """min{1, (D(y)/D(x)) * ((1-D(x))/(1-D(y)))} on clamped scores."""
    sx = clamp_scores(np.asarray(score_current, dtype=np.float64))
    sy = clamp_scores(np.asarray(score_candidate, dtype=np.float64))
    a = np.minimum(1.0, (sy / sx) * ((1.0 - sx) / (1.0 - sy)))
    return float(a) if a.ndim == 0 else a


def _logit(s: np.ndarray) -> np.ndarray:
    s = clamp_scores(s)
    return np.log(s) - np.log(1.0 - s)


@dataclass
class SamplerStats:
    requested: int
    produced: int
    proposals_used: int
    acceptance_rate: float
    budget_exhausted: bool = False


@dataclass
class SamplerResult:
    samples: np.ndarray
    scores: np.ndarray
    accepted: np.ndarray  # per output row: did an acceptance event produce it
    stats: SamplerStats


def drs_sample(
    propose: Proposer,
    score: ScoreSource,
    gamma: float,
    n: int,
    pilot_size: int,
    rng: np.random.Generator,
) -> SamplerResult:
    """Rejection sampling with acceptance sigmoid(F(x) - F_max - gamma).

    F is the score logit; F_max starts from a pilot batch and is then kept as
    a running maximum so later acceptance probabilities never exceed
    sigmoid(-gamma). Proposes until ``n`` acceptances or a budget of
    100 * n proposals is exhausted, in which case a partial result is
    returned with a warning.
    """
    if not np.isfinite(gamma):
        raise ContractViolation("gamma must be finite")
    if pilot_size < 100:
        raise ContractViolation("pilot_size must be at least 100")
    if n < 0:
        raise ContractViolation("n must be non-negative")

    f_max = float(np.max(_logit(score(propose(pilot_size, rng))))) if n > 0 else 0.0
    kept: list[np.ndarray] = []
    kept_scores: list[np.ndarray] = []
    used = 0
    budget = DRS_PROPOSAL_BUDGET_FACTOR * n
    produced = 0
    chunk = max(1000, n)
    while produced < n and used < budget:
        m = min(chunk, budget - used)
        batch = propose(m, rng)
        s = score(batch)
        f = _logit(s)
        f_max = max(f_max, float(f.max()))
        p_accept = 1.0 / (1.0 + np.exp(-(f - f_max - gamma)))
        take = rng.random(m) < p_accept
        kept.append(batch[take])
        kept_scores.append(s[take])
        produced += int(take.sum())
        used += m
    samples = np.concatenate(kept) if kept else np.zeros((0, 2))
    scores = np.concatenate(kept_scores) if kept_scores else np.zeros(0)
    samples, scores = samples[:n], scores[:n]
    exhausted = produced < n
    if exhausted:
        warnings.warn(
            f"DRS proposal budget exhausted: produced {len(samples)} of {n} requested",
            RuntimeWarning,
            stacklevel=2,
        )
    return SamplerResult(
        samples=samples,
        scores=scores,
        accepted=np.ones(len(samples), dtype=bool),
        stats=SamplerStats(
            requested=n,
            produced=len(samples),
            proposals_used=used,
            acceptance_rate=produced / used if used else 0.0,
            budget_exhausted=exhausted,
        ),
    )


def mh_sample(
    propose: Proposer,
    score: ScoreSource,
    k: int,
    n: int,
    rng: np.random.Generator,
) -> SamplerResult:
    """Independence-sampler chains: k fresh proposals per output sample.

    Each of the ``n`` chains starts at its first proposal and undergoes k - 1
    acceptance tests with the score-ratio rule; the final chain state is
    returned. ``accepted`` marks chains whose final state came from an
    acceptance move (the initial state counts for k == 1).
    """
    if k < 1:
        raise ContractViolation("chain length k must be at least 1")
    if n < 0:
        raise ContractViolation("n must be non-negative")
    x = propose(n, rng)
    sx = clamp_scores(score(x))
    accepted = np.ones(n, dtype=bool)
    moves = 0
    for _ in range(k - 1):
        y = propose(n, rng)
        sy = clamp_scores(score(y))
        a = mh_acceptance(sx, sy)
        move = rng.random(n) < a
        x[move] = y[move]
        sx[move] = sy[move]
        moves += int(move.sum())
    return SamplerResult(
        samples=x,
        scores=sx,
        accepted=accepted,
        stats=SamplerStats(
            requested=n,
            produced=n,
            proposals_used=n * k,
            acceptance_rate=moves / (n * (k - 1)) if n and k > 1 else 1.0,
        ),
    )


def collab_reject(
    refined_samples,
    refined_scores,
    rng: np.random.Generator,
) -> SamplerResult:
    """One MH chain over refined samples in arrival order.

    The first element initializes the chain; each later element replaces the
    current state with the score-ratio acceptance probability, else the
    current state is emitted again. Output length equals input length;
    ``accepted[i]`` records whether element i itself became the chain state.
    """
    samples = np.asarray(refined_samples, dtype=np.float64)
    scores = clamp_scores(np.asarray(refined_scores, dtype=np.float64).ravel())
    if samples.shape[0] == 0:
        raise ContractViolation("collab_reject requires a nonempty stream")
    if samples.shape[0] != scores.shape[0]:
        raise ContractViolation("samples and scores must have equal length")

    n = samples.shape[0]
    out = np.empty_like(samples)
    out_scores = np.empty(n)
    accepted = np.zeros(n, dtype=bool)
    u = rng.random(n)
    cur = 0
    out[0] = samples[0]
    out_scores[0] = scores[0]
    accepted[0] = True
    for i in range(1, n):
        if u[i] < mh_acceptance(scores[cur], scores[i]):
            cur = i
            accepted[i] = True
        out[i] = samples[cur]
        out_scores[i] = scores[cur]
    return SamplerResult(
        samples=out,
        scores=out_scores,
        accepted=accepted,
        stats=SamplerStats(
            requested=n,
            produced=n,
            proposals_used=n,
            acceptance_rate=float(accepted.mean()),
        ),
    )
