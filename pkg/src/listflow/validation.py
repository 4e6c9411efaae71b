"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numpy as np

from .flow import FlowState
from .geometry import DEFAULT_LAMBDA_MIN, MetricDegenerationError, min_eigenvalue
from .grid import PeriodicGrid, check_finite

__all__ = ["check_scalar_field", "check_metric_field", "check_state"]


def check_scalar_field(u, grid: PeriodicGrid) -> np.ndarray:
    u = check_finite(u, "scalar field")
    if u.shape != grid.shape:
        raise ValueError(f"scalar field has shape {u.shape}, grid is {grid.shape}")
    return u


def check_metric_field(h, grid: PeriodicGrid, lambda_min: float = DEFAULT_LAMBDA_MIN) -> np.ndarray:
    """Validate shape, symmetry, finiteness and the SPD floor of a metric field."""
    h = check_finite(h, "metric")
    n = grid.dim
    if h.shape != (n, n) + grid.shape:
        raise ValueError(f"metric has shape {h.shape}, expected {(n, n) + grid.shape}")
    if not np.array_equal(h, np.swapaxes(h, 0, 1)):
        raise ValueError("metric is not symmetric")
    lam, node = min_eigenvalue(h)
    if lam < lambda_min:
        raise MetricDegenerationError(node, lam)
    return h


def check_state(state, lambda_min: float = DEFAULT_LAMBDA_MIN) -> FlowState:
    if not isinstance(state, FlowState):
        raise TypeError(f"expected a FlowState, got {type(state).__name__}")
    check_metric_field(state.h, state.grid, lambda_min)
    return state
