"""Isotropic Gaussian kernel density estimation on a regular 2-D grid.

Figure-generation only: no benchmark metric depends on the KDE output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import ContractViolation


@dataclass
class GridSpec:
    """Axis-aligned evaluation grid covering the benchmark square."""

    x_min: float = -3.0
    x_max: float = 3.0
    y_min: float = -3.0
    y_max: float = 3.0
    nx: int = 121
    ny: int = 121

    def validate(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise ContractViolation("grid needs at least 2 points per axis")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ContractViolation("grid extents must be increasing")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def cell_area(self) -> float:
        return ((self.x_max - self.x_min) / (self.nx - 1)) * (
            (self.y_max - self.y_min) / (self.ny - 1)
        )


@dataclass
class KdeGrid:
    grid: GridSpec
    density: np.ndarray  # (ny, nx), rows indexed by y


def kde_grid(samples, bandwidth: float, grid: GridSpec | None = None) -> KdeGrid:
    """Average of isotropic Gaussian kernels, evaluated at every grid node.

    The density integrates to ~1 over the plane, so grid-sum times cell area
    approximates 1 whenever the samples sit well inside the grid.
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    if samples.shape[0] == 0:
        raise ContractViolation("kde_grid requires at least one sample")
    if bandwidth <= 0:
        raise ContractViolation("bandwidth must be positive")
    if grid is None:
        grid = GridSpec()
    grid.validate()
    xs, ys = grid.xs, grid.ys
    norm = 1.0 / (samples.shape[0] * 2.0 * np.pi * bandwidth**2)
    # (ny, nx, n) distance decomposition, chunked over samples to bound memory
    density = np.zeros((grid.ny, grid.nx))
    dx2 = (xs[None, :] - samples[:, 0:1]) ** 2  # (n, nx)
    dy2 = (ys[None, :] - samples[:, 1:2]) ** 2  # (n, ny)
    inv = 1.0 / (2.0 * bandwidth**2)
    chunk = max(1, int(4e6 / (grid.nx * grid.ny)))
    for lo in range(0, samples.shape[0], chunk):
        hi = min(lo + chunk, samples.shape[0])
        k = np.exp(-(dy2[lo:hi, :, None] + dx2[lo:hi, None, :]) * inv)  # (c, ny, nx)
        density += k.sum(axis=0)
    return KdeGrid(grid=grid, density=density * norm)
