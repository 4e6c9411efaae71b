import numpy as np
import pytest

from listflow.grid import PeriodicGrid


def band_limited(grid, rng, modes=3):
    """Random smooth periodic field built from a few Fourier modes."""
    x = grid.coords()
    f = np.zeros(grid.shape)
    for _ in range(modes):
        k = rng.integers(-3, 4, size=grid.dim)
        phase = rng.uniform(0, 2 * np.pi)
        arg = sum(2 * np.pi * ki * xi / L for ki, xi, L in zip(k, x, grid.periods))
        f += rng.normal() * np.cos(arg + phase)
    return f


def random_spd(grid, rng, spread=0.3):
    """Smooth SPD metric field: identity plus a small symmetric perturbation."""
    n = grid.dim
    h = np.zeros((n, n) + grid.shape)
    for i in range(n):
        for j in range(i, n):
            p = spread * band_limited(grid, rng) / 3
            h[i, j] = p
            h[j, i] = p
    for i in range(n):
        h[i, i] += 1.0 + spread * 2
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)


@pytest.fixture
def grid32():
    return PeriodicGrid.uniform(2, 32)
