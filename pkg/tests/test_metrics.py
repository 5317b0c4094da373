"""Divergences, calibration diagnostics, correlation, and the method evaluator.

Every DERIVED expectation is recomputed here by a direct textbook-formula
path independent of the library implementation.
"""

import math

import numpy as np
import pytest
from scipy import stats

from collabgan.metrics import (
    SMOOTHING_ALPHA,
    brier_decomposition,
    brier_score,
    correlate,
    ece,
    evaluate_method,
    js_augmented,
    kl_categorical,
    z_statistic,
)
from collabgan.mixture import default_mixture, sample_mixture
from collabgan.nn import ContractViolation


def smoothed(counts):
    p = np.asarray(counts, dtype=float) + SMOOTHING_ALPHA
    return p / p.sum()


def reference_kl(p_counts, q_counts):
    p, q = smoothed(p_counts), smoothed(q_counts)
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q))


def reference_js(p_counts, q_counts):
    p, q = smoothed(p_counts), smoothed(q_counts)
    m = 0.5 * (p + q)
    left = sum(pi * math.log2(pi / mi) for pi, mi in zip(p, m))
    right = sum(qi * math.log2(qi / mi) for qi, mi in zip(q, m))
    return 0.5 * left + 0.5 * right


class TestKl:
    def test_identical_is_zero(self):
        h = np.array([10, 5, 3, 1, 1, 1, 2, 7])
        assert kl_categorical(h, h) == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_vs_uniform_is_ln8(self):
        p = np.array([1, 0, 0, 0, 0, 0, 0, 0])
        q = np.ones(8)
        assert kl_categorical(p, q) == pytest.approx(math.log(8), rel=1e-6)

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = rng.integers(0, 50, size=8)
            q = rng.integers(1, 50, size=8)
            if p.sum() == 0:
                continue
            assert kl_categorical(p, q) == pytest.approx(reference_kl(p, q), abs=1e-12)

    def test_non_negative(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = rng.integers(0, 20, size=8) + 1
            q = rng.integers(0, 20, size=8) + 1
            assert kl_categorical(p, q) >= 0.0

    def test_empty_rejected(self):
        with pytest.raises(ContractViolation):
            kl_categorical(np.zeros(8), np.ones(8))


class TestJs:
    def test_identical_is_zero(self):
        h = np.array([5, 1, 1, 1, 1, 1, 1, 1, 3])
        assert js_augmented(h, h) == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_supports_reach_one(self):
        p = np.array([1, 1, 0, 0, 0, 0, 0, 0, 0])
        q = np.array([0, 0, 1, 1, 1, 0, 0, 0, 0])
        assert js_augmented(p, q) == pytest.approx(1.0, abs=1e-7)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            p = rng.integers(0, 30, size=9) + 1
            q = rng.integers(0, 30, size=9) + 1
            assert js_augmented(p, q) == pytest.approx(reference_js(p, q), abs=1e-12)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            p = rng.integers(0, 30, size=9) + 1
            q = rng.integers(0, 30, size=9) + 1
            a, b = js_augmented(p, q), js_augmented(q, p)
            assert a == pytest.approx(b, abs=1e-14)
            assert 0.0 <= a <= 1.0


class TestBrier:
    def test_perfect_scores(self):
        assert brier_score([1.0, 0.0, 1.0], [1, 0, 1]) == 0.0

    def test_all_half(self):
        assert brier_score([0.5] * 4, [1, 0, 1, 0]) == 0.25

    def test_arithmetic(self):
        assert brier_score([0.9, 0.2], [1, 0]) == pytest.approx(0.025, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            brier_score([0.5], [1, 0])


class TestBrierDecomposition:
    def test_single_bin_base_rate(self):
        scores = [0.5] * 8
        labels = [1, 0, 1, 0, 1, 0, 1, 0]
        rel, res, unc = brier_decomposition(scores, labels, bins=1)
        assert rel == pytest.approx(0.0, abs=1e-15)
        assert res == pytest.approx(0.0, abs=1e-15)
        assert unc == pytest.approx(0.25, abs=1e-15)

    def test_perfectly_separated(self):
        scores = [0.0, 0.0, 1.0, 1.0]
        labels = [0, 0, 1, 1]
        rel, res, unc = brier_decomposition(scores, labels, bins=10)
        assert unc == pytest.approx(0.25, abs=1e-15)
        assert res == pytest.approx(unc, abs=1e-15)
        assert rel == pytest.approx(0.0, abs=1e-15)

    def test_identity_rel_minus_res_plus_unc(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(20, 200))
            scores = rng.random(n)
            labels = (rng.random(n) < scores).astype(float)
            rel, res, unc = brier_decomposition(scores, labels, bins=10)
            # independent bin-grouped Brier: replace each score by its bin's mean
            idx = np.minimum((scores * 10).astype(int), 9)
            grouped = np.array([scores[idx == b].mean() if (idx == b).any() else 0.0 for b in range(10)])
            bs_grouped = np.mean((grouped[idx] - labels) ** 2)
            assert rel - res + unc == pytest.approx(bs_grouped, abs=1e-12)


class TestZStatistic:
    def test_balanced_half_scores(self):
        assert z_statistic([0.5, 0.5], [1, 0]) == 0.0

    def test_arithmetic(self):
        assert z_statistic([0.5, 0.5], [1, 1]) == pytest.approx(1.0 / math.sqrt(0.5), abs=1e-12)

    def test_degenerate_denominator(self):
        with pytest.raises(ContractViolation):
            z_statistic([1.0, 0.0], [1, 0])

    def test_calibrated_simulation_stays_small(self):
        rng = np.random.default_rng(5)
        hits = 0
        trials = 200
        for _ in range(trials):
            scores = rng.uniform(0.05, 0.95, size=10_000)
            labels = (rng.random(10_000) < scores).astype(float)
            if abs(z_statistic(scores, labels)) < 3.0:
                hits += 1
        assert hits / trials >= 0.99


class TestEce:
    def test_bin_calibrated_is_zero(self):
        # scores equal to per-bin empirical accuracy
        scores = [0.25] * 4 + [0.75] * 4
        labels = [1, 0, 0, 0, 1, 1, 1, 0]
        assert ece(scores, labels, 10) == pytest.approx(0.0, abs=1e-15)

    def test_all_half_all_one(self):
        assert ece([0.5] * 6, [1] * 6, 10) == pytest.approx(0.5, abs=1e-15)

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = int(rng.integers(10, 300))
            scores = rng.random(n)
            labels = rng.integers(0, 2, size=n).astype(float)
            bins = 10
            idx = np.minimum((scores * bins).astype(int), bins - 1)
            want = 0.0
            for b in range(bins):
                m = idx == b
                if m.any():
                    want += (m.sum() / n) * abs(labels[m].mean() - scores[m].mean())
            assert ece(scores, labels, bins) == pytest.approx(want, abs=1e-12)


class TestCorrelate:
    def test_identity_series(self):
        xs = np.arange(10.0)
        pear, pp, spear, sp = correlate(xs, xs)
        assert pear == pytest.approx(1.0, abs=1e-12)
        assert spear == pytest.approx(1.0, abs=1e-12)
        assert pp == pytest.approx(0.0, abs=1e-12)

    def test_strictly_decreasing_spearman(self):
        xs = np.array([3.0, 1.0, 2.0, 10.0, 4.0])
        ys = -(xs**3)  # strictly monotone decreasing map
        _, _, spear, _ = correlate(xs, ys)
        assert spear == pytest.approx(-1.0, abs=1e-12)

    def test_textbook_formula_on_fixed_data(self):
        xs = np.array([1.2, 3.4, 2.2, 5.1, 4.4, 0.5, 2.8, 3.9, 1.1, 4.0])
        ys = np.array([2.1, 3.0, 2.9, 4.8, 5.2, 1.1, 2.5, 3.3, 0.9, 4.6])
        n = len(xs)
        r_num = np.sum((xs - xs.mean()) * (ys - ys.mean()))
        r_den = math.sqrt(np.sum((xs - xs.mean()) ** 2) * np.sum((ys - ys.mean()) ** 2))
        r = r_num / r_den
        t = r * math.sqrt((n - 2) / (1 - r * r))
        p = 2 * stats.t.sf(abs(t), df=n - 2)
        rank = lambda v: stats.rankdata(v)
        rs_num = np.sum((rank(xs) - rank(xs).mean()) * (rank(ys) - rank(ys).mean()))
        rs_den = math.sqrt(
            np.sum((rank(xs) - rank(xs).mean()) ** 2) * np.sum((rank(ys) - rank(ys).mean()) ** 2)
        )
        rs = rs_num / rs_den
        ts = rs * math.sqrt((n - 2) / (1 - rs * rs))
        ps = 2 * stats.t.sf(abs(ts), df=n - 2)

        pear, pp, spear, sp = correlate(xs, ys)
        assert pear == pytest.approx(r, abs=1e-12)
        assert pp == pytest.approx(p, abs=1e-12)
        assert spear == pytest.approx(rs, abs=1e-12)
        assert sp == pytest.approx(ps, abs=1e-12)

    def test_tied_ranks_average(self):
        xs = np.array([1.0, 1.0, 2.0, 3.0])
        ys = np.array([1.0, 2.0, 3.0, 4.0])
        _, _, spear, _ = correlate(xs, ys)
        want = stats.spearmanr(xs, ys).statistic
        assert spear == pytest.approx(want, abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(ContractViolation):
            correlate([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_too_short_rejected(self):
        with pytest.raises(ContractViolation):
            correlate([1.0, 2.0], [1.0, 2.0])


class TestEvaluateMethod:
    def test_real_data_scores_near_perfect(self):
        spec = default_mixture()
        rng = np.random.default_rng(7)
        samples = sample_mixture(spec, 10_000, rng)
        m = evaluate_method(samples, spec, rng=rng)
        assert m.good_fraction > 0.99
        assert m.kl_good < 0.01
        assert m.js_augmented < 0.01

    def test_single_mode_collapse(self):
        spec = default_mixture()
        samples = np.tile(spec.centers[0], (500, 1))
        m = evaluate_method(samples, spec)
        assert m.good_fraction == 1.0
        # missing-mode KL against exact weights: all mass on mode 0
        assert m.kl_good > 1.0
        assert m.js_augmented > 0.05

    def test_all_bad_samples(self):
        spec = default_mixture()
        samples = np.full((100, 2), 50.0)
        m = evaluate_method(samples, spec)
        assert m.good_fraction == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ContractViolation):
            evaluate_method(np.zeros((0, 2)), default_mixture())
