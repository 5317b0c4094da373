"""The imbalanced 8-Gaussian benchmark: sampling, densities, good-sample rule.

Eight isotropic components sit equally spaced on a circle; 90% of the mass
lives on two diametrically opposed "heavy" components, the remaining 10% is
split over the other six. A generated point is "good" when it lies strictly
within four standard deviations of its nearest component center.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import ContractViolation

NUM_MODES = 8
BAD_BUCKET = NUM_MODES  # index of the extra category in augmented histograms


@dataclass
class MixtureSpec:
    centers: np.ndarray  # (8, 2)
    std: float
    weights: np.ndarray  # (8,)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.centers.shape != (NUM_MODES, 2):
            raise ContractViolation(f"expected {NUM_MODES} 2-D centers, got {self.centers.shape}")
        if self.weights.shape != (NUM_MODES,):
            raise ContractViolation("need one weight per component")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ContractViolation("weights must sum to 1 within 1e-12")
        if np.any(self.weights < 0):
            raise ContractViolation("weights must be non-negative")
        if self.std <= 0:
            raise ContractViolation("std must be positive")
        if len({tuple(c) for c in self.centers}) != NUM_MODES:
            raise ContractViolation("centers must be distinct")


def default_mixture(radius: float = 2.0, std: float = 0.05) -> MixtureSpec:
    """Benchmark layout: circle of radius 2, heavy pair on the x-axis.

    Weights are (0.45, 0.45) on the diametrically opposed pair and 1/60 on
    each of the six light components, summing to 1 exactly.
    """
    angles = np.arange(NUM_MODES) * (2.0 * np.pi / NUM_MODES)
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    weights = np.full(NUM_MODES, 1.0 / 60.0)
    weights[0] = 0.45
    weights[NUM_MODES // 2] = 0.45
    return MixtureSpec(centers=centers, std=std, weights=weights)


def sample_mixture(spec: MixtureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points: component by weight, then isotropic Gaussian at its center."""
    if n < 0:
        raise ContractViolation("n must be non-negative")
    comp = rng.choice(NUM_MODES, size=n, p=spec.weights)
    return spec.centers[comp] + spec.std * rng.standard_normal((n, 2))


def mixture_pdf(spec: MixtureSpec, points) -> np.ndarray:
    """Exact density of the mixture at each point (used by oracle scorers)."""
    points = np.asarray(points, dtype=np.float64)
    d2 = np.sum((points[:, None, :] - spec.centers[None, :, :]) ** 2, axis=2)
    comp = np.exp(-d2 / (2.0 * spec.std**2)) / (2.0 * np.pi * spec.std**2)
    return comp @ spec.weights


def classify_good(samples, spec: MixtureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample (is_good, nearest_mode_index).

    Good means Euclidean distance to the nearest center is strictly less
    than 4 * std; the nearest mode is reported for bad samples too.
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    if samples.shape[0] == 0:
        return np.zeros(0, dtype=bool), np.zeros(0, dtype=np.int64)
    d2 = np.sum((samples[:, None, :] - spec.centers[None, :, :]) ** 2, axis=2)
    nearest = np.argmin(d2, axis=1)
    dist = np.sqrt(d2[np.arange(len(samples)), nearest])
    return dist < 4.0 * spec.std, nearest


@dataclass
class CategoricalHist:
    """Counts over 8 mode buckets plus one bucket for bad samples."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros(NUM_MODES + 1, dtype=np.int64))

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (NUM_MODES + 1,):
            raise ContractViolation("augmented histogram has exactly 9 buckets")
        if np.any(self.counts < 0):
            raise ContractViolation("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def mode_counts(self) -> np.ndarray:
        return self.counts[:NUM_MODES]

    @property
    def bad_count(self) -> int:
        return int(self.counts[BAD_BUCKET])


def histogram_samples(samples, spec: MixtureSpec) -> CategoricalHist:
    """Augmented categorical histogram: good samples per mode, bad in bucket 8."""
    good, nearest = classify_good(samples, spec)
    counts = np.zeros(NUM_MODES + 1, dtype=np.int64)
    np.add.at(counts, np.where(good, nearest, BAD_BUCKET), 1)
    return CategoricalHist(counts=counts)
