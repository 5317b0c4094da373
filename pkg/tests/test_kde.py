"""Gaussian KDE grid: peak placement, normalization, symmetry, linearity."""

import numpy as np
import pytest

from collabgan.kde import GridSpec, KdeGrid, kde_grid
from collabgan.nn import ContractViolation


def test_single_sample_peaks_at_nearest_node():
    grid = GridSpec(-1, 1, -1, 1, 41, 41)
    sample = np.array([[0.31, -0.52]])
    out = kde_grid(sample, bandwidth=0.2, grid=grid)
    iy, ix = np.unravel_index(np.argmax(out.density), out.density.shape)
    assert abs(grid.xs[ix] - 0.31) <= (grid.xs[1] - grid.xs[0]) / 2 + 1e-12
    assert abs(grid.ys[iy] - (-0.52)) <= (grid.ys[1] - grid.ys[0]) / 2 + 1e-12


def test_mass_normalization():
    rng = np.random.default_rng(0)
    samples = rng.normal(scale=0.4, size=(400, 2))
    grid = GridSpec(-3, 3, -3, 3, 121, 121)
    out = kde_grid(samples, bandwidth=0.3, grid=grid)
    assert out.density.sum() * grid.cell_area == pytest.approx(1.0, abs=0.02)


def test_mirror_symmetry():
    rng = np.random.default_rng(1)
    samples = rng.normal(size=(100, 2))
    mirrored = samples * np.array([-1.0, 1.0])
    grid = GridSpec(-3, 3, -3, 3, 61, 61)
    a = kde_grid(samples, 0.25, grid).density
    b = kde_grid(mirrored, 0.25, grid).density
    np.testing.assert_allclose(a, b[:, ::-1], atol=1e-12)


def test_linearity_in_sample_union():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(30, 2))
    b = rng.normal(size=(70, 2))
    grid = GridSpec(-3, 3, -3, 3, 31, 31)
    da = kde_grid(a, 0.3, grid).density
    db = kde_grid(b, 0.3, grid).density
    dab = kde_grid(np.vstack([a, b]), 0.3, grid).density
    np.testing.assert_allclose(dab, 0.3 * da + 0.7 * db, atol=1e-12)


def test_empty_samples_rejected():
    with pytest.raises(ContractViolation):
        kde_grid(np.zeros((0, 2)), 0.1)


def test_bad_bandwidth_rejected():
    with pytest.raises(ContractViolation):
        kde_grid(np.zeros((1, 2)), 0.0)
