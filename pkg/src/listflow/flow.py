"""Method-of-lines integration of the warped-product (List) flow.

The evolved system on the base torus is

    d/dt h = -2 Ric(h) + 2 du (x) du,
    d/dt u = Laplace_h u,

optionally in DeTurck gauge against the flat reference metric, which adds
the Lie derivative ``L_W h`` to the metric equation and the advection
``W . grad u`` to the scalar equation.  Gauged solutions are pullbacks of
ungauged ones, so every diffeomorphism-invariant sup-norm agrees.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diagnostics import DiagnosticsMonitor, DiagnosticsRecord
from .geometry import (
    DEFAULT_LAMBDA_MIN,
    GeometryCache,
    MetricDegenerationError,
    build_cache,
    min_eigenvalue,
)
from .grid import PeriodicGrid, check_finite, gradient

logger = logging.getLogger(__name__)

__all__ = [
    "FlowState",
    "FlowConfig",
    "RunResult",
    "list_flow_rhs",
    "deturck_vector",
    "lie_derivative_metric",
    "gauged_rhs",
    "stable_dt",
    "step",
    "run",
]

INTEGRATORS = ("euler", "rk2", "rk4")


@dataclass(frozen=True)
class FlowState:
    """Complete dynamical state ``(t, h, u)`` on a periodic grid."""

    t: float
    h: np.ndarray
    u: np.ndarray
    grid: PeriodicGrid

    def __post_init__(self):
        n = self.grid.dim
        h = check_finite(self.h, "metric")
        u = check_finite(self.u, "u")
        if h.shape != (n, n) + self.grid.shape:
            raise ValueError(f"metric shape {h.shape} does not match grid {(n, n) + self.grid.shape}")
        if u.shape != self.grid.shape:
            raise ValueError(f"u shape {u.shape} does not match grid {self.grid.shape}")
        if not np.array_equal(h, np.swapaxes(h, 0, 1)):
            raise ValueError("metric field is not symmetric")
        if not np.isfinite(self.t):
            raise ValueError(f"time must be finite, got {self.t}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class FlowConfig:
    """Integration and monitoring parameters.

    ``t0`` doubles as the reference time ``alpha`` of the decay bounds.
    ``evolve_metric=False`` freezes ``h`` (heat flow of ``u`` only) and
    ``couple_u=False`` drops the ``2 du (x) du`` term, leaving pure Ricci flow
    for ``h``.  ``dt`` fixes the step instead of using the CFL bound.
    """

    t0: float = 0.0
    t_end: float = 1.0
    cfl: float = 0.2
    integrator: str = "rk4"
    order: int = 2
    deturck: bool = True
    mu: float | str = "auto"
    lambda_min: float = DEFAULT_LAMBDA_MIN
    output_every: int = 10
    evolve_metric: bool = True
    couple_u: bool = True
    c_est: float = 10.0
    tol_decay: float = 0.05
    tol_mono: float = 1e-3
    tol_hess: float = 0.05
    dt: float | None = None

    def __post_init__(self):
        if not self.t_end >= self.t0:
            raise ValueError(f"t_end ({self.t_end}) must not precede t0 ({self.t0})")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.order not in (2, 4):
            raise ValueError(f"stencil order must be 2 or 4, got {self.order}")
        if self.mu != "auto" and not (isinstance(self.mu, (int, float)) and self.mu >= 0):
            raise ValueError(f"mu must be 'auto' or a non-negative number, got {self.mu!r}")
        if self.output_every < 1:
            raise ValueError("output_every must be at least 1")
        if self.lambda_min <= 0:
            raise ValueError("lambda_min must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("a fixed dt must be positive")


def _sym(t):
    return 0.5 * (t + np.swapaxes(t, 0, 1))


def _outer(a, b):
    return _sym(np.einsum("i...,j...->ij...", a, b))


def list_flow_rhs(state: FlowState, cache: GeometryCache) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side ``(-2 Ric + 2 du du, Laplace_h u)`` of the ungauged flow."""
    return -2.0 * cache.ricci + 2.0 * _outer(cache.du, cache.du), cache.lap_u


def deturck_vector(h_inv, gamma, reference_gamma=None) -> np.ndarray:
    """``W^k = h^ij (Gamma^k_ij - reference Gamma^k_ij)``; the flat reference has zero symbols."""
    if reference_gamma is not None:
        gamma = gamma - reference_gamma
    return np.einsum("ij...,kij...->k...", h_inv, gamma)


def lie_derivative_metric(h, dh, w, grid: PeriodicGrid, order: int = 2) -> np.ndarray:
    """``(L_W h)_ij = W^k d_k h_ij + h_kj d_i W^k + h_ik d_j W^k``."""
    dw = gradient(w, grid, order)  # dw[i, k] = d_i W^k
    b = np.einsum("ik...,kj...->ij...", dw, h)
    return _sym(np.einsum("k...,kij...->ij...", w, dh)) + (b + np.swapaxes(b, 0, 1))


def gauged_rhs(state: FlowState, cache: GeometryCache, deturck: bool = True, *,
               evolve_metric: bool = True, couple_u: bool = True):
    """Flow right-hand side with optional DeTurck gauge and reduced variants.

    ``state`` may be ``None``; only the cache (built from the state) is read.
    """
    if evolve_metric and couple_u:
        dh, du = list_flow_rhs(state, cache)
    else:
        dh = -2.0 * cache.ricci if evolve_metric else np.zeros_like(cache.h)
        du = cache.lap_u
    if not deturck:
        return dh, du
    w = deturck_vector(cache.h_inv, cache.christoffel)
    if evolve_metric:
        dh = dh + lie_derivative_metric(cache.h, cache.dh, w, cache.grid, cache.order)
    return dh, du + np.einsum("k...,k...->...", w, cache.du)


def _rhs(cache, config):
    return gauged_rhs(None, cache, config.deturck,
                      evolve_metric=config.evolve_metric, couple_u=config.couple_u)


def max_inverse_eigenvalue(h) -> float:
    lam, _ = min_eigenvalue(h)
    return 1.0 / lam


def stable_dt(state: FlowState, cache: GeometryCache | None, config: FlowConfig) -> float:
    """Explicit parabolic step ``cfl * min(dx^2) / (2 dim Lambda)``, clamped to the remaining time.

    ``Lambda`` is the largest eigenvalue of ``h^-1`` over all nodes.
    """
    remaining = config.t_end - state.t
    if config.dt is not None:
        return min(config.dt, remaining)
    lam_max = max_inverse_eigenvalue(state.h)
    if not np.isfinite(lam_max) or lam_max <= 0:
        raise ValueError(f"inverse-metric eigenvalue bound is not usable: {lam_max}")
    grid = state.grid
    dt = config.cfl * min(dx * dx for dx in grid.spacings) / (2 * grid.dim * lam_max)
    return min(dt, remaining)


def _cache(h, u, grid, config, check=False):
    return build_cache(h, u, grid, config.order, config.lambda_min, check=check)


def step(state: FlowState, config: FlowConfig, dt: float | None = None,
         cache: GeometryCache | None = None) -> FlowState:
    """Advance one explicit step and re-validate the metric.

    Raises
    ------
    MetricDegenerationError
        If the new metric has a node below ``config.lambda_min``.
    """
    grid = state.grid
    if cache is None:
        cache = _cache(state.h, state.u, grid, config, check=True)
    if dt is None:
        dt = stable_dt(state, cache, config)
    h0, u0 = state.h, state.u

    def f(h, u):
        return _rhs(_cache(h, u, grid, config), config)

    k1 = _rhs(cache, config)
    if config.integrator == "euler":
        h1 = h0 + dt * k1[0]
        u1 = u0 + dt * k1[1]
    elif config.integrator == "rk2":
        # Heun
        k2 = f(h0 + dt * k1[0], u0 + dt * k1[1])
        h1 = h0 + 0.5 * dt * (k1[0] + k2[0])
        u1 = u0 + 0.5 * dt * (k1[1] + k2[1])
    else:
        k2 = f(h0 + 0.5 * dt * k1[0], u0 + 0.5 * dt * k1[1])
        k3 = f(h0 + 0.5 * dt * k2[0], u0 + 0.5 * dt * k2[1])
        k4 = f(h0 + dt * k3[0], u0 + dt * k3[1])
        h1 = h0 + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        u1 = u0 + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])

    t1 = state.t + dt
    if not (np.all(np.isfinite(h1)) and np.all(np.isfinite(u1))):
        node = np.argwhere(~np.isfinite(h1).all(axis=(0, 1)) | ~np.isfinite(u1))[0]
        raise MetricDegenerationError(node, np.nan, t1)
    lam, node = min_eigenvalue(h1)
    if not lam >= config.lambda_min:
        raise MetricDegenerationError(node, lam, t1)
    return FlowState(t1, h1, u1, grid)


@dataclass
class RunResult:
    records: list[DiagnosticsRecord]
    final_state: FlowState
    status: str  # "completed" or "degenerate"
    n_steps: int
    monitor: DiagnosticsMonitor
    message: str = ""
    degeneration: MetricDegenerationError | None = field(default=None, repr=False)

    @property
    def flags_ok(self) -> bool:
        return all(r.all_ok for r in self.records)


def run(initial: FlowState, config: FlowConfig, *, monitor: DiagnosticsMonitor | None = None,
        start_step: int = 0, emit_initial: bool = True,
        on_step: Callable[[int, FlowState, DiagnosticsMonitor], None] | None = None) -> RunResult:
    """Integrate from ``initial`` to ``config.t_end``, emitting diagnostics records.

    A record is produced for the initial state (unless resuming), after every
    ``config.output_every`` steps and at ``t_end``.  ``on_step`` is called after
    each accepted step with the global step index; resuming passes the restored
    ``monitor`` and ``start_step``.  Degeneration stops the run with status
    ``"degenerate"`` and the records gathered so far.
    """
    if monitor is None:
        monitor = DiagnosticsMonitor.from_config(config)
    state = initial
    cache = _cache(state.h, state.u, state.grid, config, check=True)
    records = []
    if emit_initial:
        records.append(monitor.record(state.t, state.u, cache))
    n = start_step
    while state.t < config.t_end:
        dt = stable_dt(state, cache, config)
        last_step = dt >= config.t_end - state.t
        try:
            new = step(state, config, dt, cache)
        except MetricDegenerationError as exc:
            logger.warning("stopping run: %s", exc)
            return RunResult(records, state, "degenerate", n, monitor, str(exc), exc)
        if last_step:
            # land exactly on t_end regardless of rounding in t + dt
            new = FlowState(config.t_end, new.h, new.u, new.grid)
        n += 1
        new_cache = _cache(new.h, new.u, new.grid, config)
        if n % config.output_every == 0 or last_step:
            records.append(monitor.record(new.t, new.u, new_cache, prev=(cache, dt)))
        state, cache = new, new_cache
        if on_step is not None:
            on_step(n, state, monitor)
    return RunResult(records, state, "completed", n, monitor)
