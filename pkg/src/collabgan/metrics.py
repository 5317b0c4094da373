"""Divergence metrics, calibration diagnostics, and correlation analysis.

Conventions, fixed across the package and recorded in output metadata:

* categorical KL uses natural logs over the 8 mode buckets only;
* JS uses base-2 logs over the 9 augmented buckets, so it lies in [0, 1];
* both smooth histograms with alpha = 1e-10 per bucket before dividing;
* calibration labels follow real = 1, generated = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .mixture import NUM_MODES, CategoricalHist, MixtureSpec, histogram_samples, sample_mixture
from .nn import ContractViolation

SMOOTHING_ALPHA = 1e-10


def _smoothed_freqs(counts: np.ndarray) -> np.ndarray:
    # count-level smoothing: alpha added to every bucket before normalizing
    p = np.asarray(counts, dtype=np.float64) + SMOOTHING_ALPHA
    return p / p.sum()


def kl_categorical(p_hist, q_hist) -> float:
    """KL(p || q) in nats over the 8 mode buckets; the bad bucket is excluded.

    A histogram with zero total count is rejected; a histogram whose mass is
    entirely in the bad bucket smooths to uniform over the modes.
    """
    p = _smoothed_freqs(_mode_counts(p_hist))
    q = _smoothed_freqs(_mode_counts(q_hist))
    return float(np.sum(p * np.log(p / q)))


def js_augmented(real_hist, gen_hist) -> float:
    """Jensen-Shannon divergence (base 2) over all 9 augmented buckets."""
    p = _smoothed_freqs(_augmented_counts(real_hist))
    q = _smoothed_freqs(_augmented_counts(gen_hist))
    m = 0.5 * (p + q)
    return float(0.5 * np.sum(p * np.log2(p / m)) + 0.5 * np.sum(q * np.log2(q / m)))


def _mode_counts(hist) -> np.ndarray:
    if isinstance(hist, CategoricalHist):
        if hist.total == 0:
            raise ContractViolation("histogram is empty")
        return hist.mode_counts
    arr = np.asarray(hist, dtype=np.float64)
    if arr.sum() <= 0:
        raise ContractViolation("histogram is empty")
    if arr.shape == (NUM_MODES + 1,):
        return arr[:NUM_MODES]
    if arr.shape == (NUM_MODES,):
        return arr
    raise ContractViolation(f"expected {NUM_MODES} or {NUM_MODES + 1} buckets, got {arr.shape}")


def _augmented_counts(hist) -> np.ndarray:
    if isinstance(hist, CategoricalHist):
        if hist.total == 0:
            raise ContractViolation("histogram is empty")
        return hist.counts
    arr = np.asarray(hist, dtype=np.float64)
    if arr.sum() <= 0:
        raise ContractViolation("histogram is empty")
    if arr.shape != (NUM_MODES + 1,):
        raise ContractViolation(f"augmented histogram needs {NUM_MODES + 1} buckets, got {arr.shape}")
    return arr


def _check_scores_labels(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if scores.shape != labels.shape:
        raise ContractViolation("scores and labels must have equal length")
    if scores.size == 0:
        raise ContractViolation("need at least one score")
    if np.any((labels != 0) & (labels != 1)):
        raise ContractViolation("labels must be 0 or 1")
    if np.any((scores < 0) | (scores > 1)):
        raise ContractViolation("scores must lie in [0, 1]")
    return scores, labels


def brier_score(scores, labels) -> float:
    """Mean squared error of probabilistic scores against binary labels."""
    scores, labels = _check_scores_labels(scores, labels)
    return float(np.mean((labels - scores) ** 2))


def brier_decomposition(scores, labels, bins: int = 10) -> tuple[float, float, float]:
    """Murphy decomposition (reliability, resolution, uncertainty).

    Scores are grouped into ``bins`` equal-width confidence bins; the identity
    reliability - resolution + uncertainty recovers the bin-grouped Brier
    score exactly. Empty bins are skipped.
    """
    scores, labels = _check_scores_labels(scores, labels)
    if bins < 1:
        raise ContractViolation("need at least one bin")
    idx = np.minimum((scores * bins).astype(int), bins - 1)
    n = scores.size
    base = labels.mean()
    rel = 0.0
    res = 0.0
    for b in range(bins):
        mask = idx == b
        nb = int(mask.sum())
        if nb == 0:
            continue
        conf = scores[mask].mean()
        acc = labels[mask].mean()
        rel += nb * (conf - acc) ** 2
        res += nb * (acc - base) ** 2
    unc = base * (1.0 - base)
    return rel / n, res / n, float(unc)


def z_statistic(scores, labels) -> float:
    """Calibration statistic: summed residuals over their predicted std.

    Z = sum(y_i - s_i) / sqrt(sum(s_i (1 - s_i))).
    """
    scores, labels = _check_scores_labels(scores, labels)
    denom = float(np.sum(scores * (1.0 - scores)))
    if denom <= 0.0:
        raise ContractViolation("degenerate Z denominator: all scores are exactly 0 or 1")
    return float(np.sum(labels - scores) / np.sqrt(denom))


def ece(scores, labels, num_bins: int = 10) -> float:
    """Expected calibration error over equal-width bins on [0, 1].

    Sum over bins of (bin size / N) * |mean label - mean score|; empty bins
    contribute nothing.
    """
    scores, labels = _check_scores_labels(scores, labels)
    if num_bins < 1:
        raise ContractViolation("need at least one bin")
    idx = np.minimum((scores * num_bins).astype(int), num_bins - 1)
    total = 0.0
    n = scores.size
    for b in range(num_bins):
        mask = idx == b
        nb = int(mask.sum())
        if nb == 0:
            continue
        total += (nb / n) * abs(labels[mask].mean() - scores[mask].mean())
    return float(total)


def _rank_with_ties(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based), ties share the mean of their rank positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson_with_p(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    n = xs.size
    xm = xs - xs.mean()
    ym = ys - ys.mean()
    denom = np.sqrt(np.sum(xm**2) * np.sum(ym**2))
    if denom == 0.0:
        raise ContractViolation("undefined correlation: zero variance in a series")
    r = float(np.sum(xm * ym) / denom)
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stats.t.sf(abs(t), df=n - 2))
    return r, p


def correlate(xs, ys) -> tuple[float, float, float, float]:
    """Pearson and Spearman correlations with two-sided t-approximation p-values.

    Returns (pearson, pearson_p, spearman, spearman_p). Spearman ranks use
    average ranks for ties.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.shape != ys.shape or xs.size < 3:
        raise ContractViolation("correlate needs two equal-length series of length >= 3")
    pearson, pearson_p = _pearson_with_p(xs, ys)
    spearman, spearman_p = _pearson_with_p(_rank_with_ties(xs), _rank_with_ties(ys))
    return pearson, pearson_p, spearman, spearman_p


@dataclass
class DiagnosisReport:
    """Discriminator optimality diagnostics on a labeled test set (real = 1)."""

    brier: float
    z: float
    ece: float
    n: int


def diagnose_scores(scores, labels, num_bins: int = 10) -> DiagnosisReport:
    scores, labels = _check_scores_labels(scores, labels)
    return DiagnosisReport(
        brier=brier_score(scores, labels),
        z=z_statistic(scores, labels),
        ece=ece(scores, labels, num_bins),
        n=scores.size,
    )


@dataclass
class MethodMetrics:
    """The three benchmark metrics for one sampling method."""

    good_fraction: float
    kl_good: float
    js_augmented: float
    n: int


def evaluate_method(
    samples,
    spec: MixtureSpec,
    real=None,
    rng: np.random.Generator | None = None,
) -> MethodMetrics:
    """Good-sample fraction, categorical KL, and augmented JS for one method.

    The real-side histogram comes from ``real`` when given, from a fresh draw
    of ``len(samples)`` real points when ``rng`` is given, and from the exact
    mixture weights otherwise. KL is KL(real || generated), which punishes
    missing modes.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] == 0:
        raise ContractViolation("evaluate_method requires a nonempty sample set")
    gen_hist = histogram_samples(samples, spec)
    if real is None and rng is not None:
        real = sample_mixture(spec, samples.shape[0], rng)
    if real is not None:
        real_hist = histogram_samples(real, spec)
    else:
        real_hist = np.concatenate([spec.weights, [0.0]])  # exact-weights fallback
    return MethodMetrics(
        good_fraction=float(gen_hist.mode_counts.sum()) / gen_hist.total,
        kl_good=kl_categorical(real_hist, gen_hist),
        js_augmented=js_augmented(real_hist, gen_hist),
        n=gen_hist.total,
    )
