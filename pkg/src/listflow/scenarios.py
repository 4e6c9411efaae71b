"""Closed-form initial data presets.

All generators are finitely many Fourier modes in the node coordinates, so
data on a coarse grid is exactly the restriction of data on a refined grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .flow import FlowState
from .geometry import min_eigenvalue
from .grid import PeriodicGrid

__all__ = ["Scenario", "SCENARIOS", "instantiate", "default_grid", "conformal_factor"]

SPD_MARGIN = 1e-3
DEFAULT_AMPLITUDE = 0.5
CONFORMAL_AMPLITUDE = 0.3


def _wave(grid, axis):
    return 2 * np.pi * grid.coords()[axis] / grid.periods[axis]


def conformal_factor(grid: PeriodicGrid, amplitude: float = CONFORMAL_AMPLITUDE) -> np.ndarray:
    """``phi = a cos(2 pi x / L)`` for the conformal metric ``e^{2 phi} delta``."""
    return amplitude * np.cos(_wave(grid, 0))


def _flat(grid):
    n = grid.dim
    h = np.zeros((n, n) + grid.shape)
    for i in range(n):
        h[i, i] = 1.0
    return h


def _conformal(grid, n_conformal=2):
    h = _flat(grid)
    factor = np.exp(2.0 * conformal_factor(grid))
    for i in range(n_conformal):
        h[i, i] = factor
    return h


def _bump(grid, amplitude):
    return amplitude * np.sin(_wave(grid, 0)) * np.sin(_wave(grid, 1))


@dataclass(frozen=True)
class Scenario:
    name: str
    dims: tuple[int, ...]
    metric: Callable[[PeriodicGrid], np.ndarray]
    scalar: Callable[[PeriodicGrid, float], np.ndarray]
    default_dim: int = 2
    description: str = ""


SCENARIOS = {
    s.name: s
    for s in [
        Scenario("fixed_point", (2, 3), _flat, lambda g, a: np.zeros(g.shape),
                 description="flat metric, u = 0"),
        Scenario("flat_bump_u", (2, 3), _flat, _bump,
                 description="flat metric, u = A sin(2 pi x/L) sin(2 pi y/L)"),
        Scenario("conformal_bump", (2,), _conformal, lambda g, a: np.zeros(g.shape),
                 description="h = exp(2 phi) delta with phi = 0.3 cos(2 pi x/L), u = 0"),
        Scenario("coupled", (2,), _conformal, _bump,
                 description="conformal metric with the bump u"),
        Scenario("product3d", (3,), _conformal, _bump, default_dim=3,
                 description="conformal 2D block plus a flat circle, bump u"),
    ]
}


def default_grid(name: str, size: int = 64, period: float = 2 * np.pi, fiber_size: int | None = None):
    """Grid matching a preset's dimension; ``product3d`` uses ``fiber_size`` (default 8) on its circle."""
    scen = _lookup(name)
    if scen.default_dim == 3:
        return PeriodicGrid((size, size, fiber_size or 8), (period,) * 3)
    return PeriodicGrid.uniform(scen.default_dim, size, period)


def _lookup(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


def instantiate(name: str, grid: PeriodicGrid, t0: float = 0.0, amplitude: float | None = None) -> FlowState:
    """Initial :class:`FlowState` of preset ``name`` on ``grid`` at time ``t0``."""
    scen = _lookup(name)
    if grid.dim not in scen.dims:
        raise ValueError(f"scenario {name!r} needs grid dimension in {scen.dims}, got {grid.dim}")
    h = scen.metric(grid)
    u = scen.scalar(grid, DEFAULT_AMPLITUDE if amplitude is None else amplitude)
    lam, node = min_eigenvalue(h)
    if lam < SPD_MARGIN:
        raise ValueError(f"scenario {name!r} metric has eigenvalue {lam:.3g} < {SPD_MARGIN} at node {node}")
    return FlowState(t0, h, u, grid)
