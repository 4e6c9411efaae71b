"""Monitored quantities and bound checks along a flow run.

Every monitor is a sup-norm of a scalar built from diffeomorphism-invariant
quantities, so gauged and ungauged runs are directly comparable.  ``t0``
plays the role of the reference time ``alpha`` in the decay bounds.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .geometry import GeometryCache
from .grid import gradient

__all__ = [
    "DiagnosticsRecord",
    "DiagnosticsMonitor",
    "FMonotoneResult",
    "TypeIIISummary",
    "make_record",
    "resolve_mu",
    "thm1_bound",
    "check_thm1_decay",
    "check_monotone_quantity",
    "check_F_monotone",
    "grad_identity_residual_field",
    "check_grad_identity_residual",
    "check_hessian_inequality",
    "check_typeIII_monitors",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    sup_grad_u_sq: float
    sup_hess_u_sq: float
    sup_ric: float
    sup_rm: float
    osc_u: float
    sup_F: float
    sup_F1: float
    t_sup_rm: float
    t_sup_hess: float
    t_sup_grad: float
    mono_Q: float
    residual_grad_identity: float
    thm1_decay_ok: bool
    mono_ok: bool
    F_monotone_ok: bool
    hess_ineq_ok: bool

    @property
    def typeIII_monitor(self) -> float:
        """``t (sup|Rm| + sup|D^2 u|^2 + sup|du|^2)``."""
        return self.t * (self.sup_rm + self.sup_hess_u_sq + self.sup_grad_u_sq)

    @property
    def all_ok(self) -> bool:
        return self.thm1_decay_ok and self.mono_ok and self.F_monotone_ok and self.hess_ineq_ok

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def resolve_mu(mu, sup_rm: float, sup_grad: float, c_est: float) -> float:
    """``mu = 'auto'`` resolves to ``2 c_est (sup|Rm| + sup|du|^2)``."""
    if mu == "auto":
        return 2.0 * c_est * (sup_rm + sup_grad)
    return float(mu)


def thm1_bound(m0: float, t: float, t0: float) -> float:
    """Comparison solution ``M0 / (1 + 2 M0 (t - t0))`` of ``dM/dt = -2 M^2``."""
    return m0 / (1.0 + 2.0 * m0 * (t - t0))


def _grad(cache, q):
    return gradient(q, cache.grid, cache.order)


def _time_operator(prev: GeometryCache, q_prev, q_next, dt, w=None):
    """Discrete ``(d_t - Laplace_h) q`` at the earlier state, gauge-corrected when ``w`` is given."""
    out = (q_next - q_prev) / dt - prev.laplacian(q_prev)
    if w is not None:
        out = out - np.einsum("k...,k...->...", w, _grad(prev, q_prev))
    return out


def _deturck_w(cache: GeometryCache):
    return np.einsum("ij...,kij...->k...", cache.h_inv, cache.christoffel)


def grad_identity_residual_field(prev: GeometryCache, nxt: GeometryCache, dt: float, *,
                                 deturck: bool = False, evolve_metric: bool = True,
                                 couple_u: bool = True) -> np.ndarray:
    """Pointwise residual of the evolution identity for ``|du|^2``.

    For the full flow the identity is ``(d_t - Laplace) |du|^2 = -2|D^2u|^2 - 2|du|^4``;
    with a frozen metric the Bochner term ``-2 Ric(du, du)`` replaces the quartic
    term, and without the ``du (x) du`` coupling both drop out.
    """
    w = _deturck_w(prev) if deturck else None
    lhs = _time_operator(prev, prev.grad_u_norm_sq, nxt.grad_u_norm_sq, dt, w)
    rhs = -2.0 * prev.hess_u_norm_sq
    if evolve_metric and couple_u:
        rhs = rhs - 2.0 * prev.grad_u_norm_sq ** 2
    elif not evolve_metric:
        rhs = rhs - 2.0 * np.einsum("ij...,i...,j...->...", prev.ricci, prev.grad_u, prev.grad_u)
    return lhs - rhs


def check_grad_identity_residual(prev: GeometryCache, nxt: GeometryCache, dt: float, **kw) -> float:
    """Sup-norm of :func:`grad_identity_residual_field`; ``O(dt + dx^order)``."""
    return float(np.max(np.abs(grad_identity_residual_field(prev, nxt, dt, **kw))))


def check_hessian_inequality(prev: GeometryCache, nxt: GeometryCache, dt: float, c_est: float = 10.0, *,
                             tol: float = 0.05, deturck: bool = False) -> bool:
    """One-sided check of ``(d_t - Laplace)|D^2u|^2 <= C (|Rm| + |du|^2) |D^2u|^2``.

    The favourable ``-2|D^3 u|^2`` term is dropped.  The discrete left side
    carries truncation error, so ``tol`` times the sup of its constituent
    terms is allowed as slack.
    """
    q0, q1 = prev.hess_u_norm_sq, nxt.hess_u_norm_sq
    dtq = (q1 - q0) / dt
    lap = prev.laplacian(q0)
    lhs = dtq - lap
    scale = np.max(np.abs(dtq)) + np.max(np.abs(lap))
    if deturck:
        adv = np.einsum("k...,k...->...", _deturck_w(prev), _grad(prev, q0))
        lhs = lhs - adv
        scale += np.max(np.abs(adv))
    sup_rm = np.sqrt(max(np.max(prev.riemann_norm_sq), 0.0))
    bound = c_est * (sup_rm + np.max(prev.grad_u_norm_sq)) * q0
    return bool(np.max(lhs - bound) <= tol * scale)


@dataclass
class DiagnosticsMonitor:
    """Running state needed to turn geometry caches into records.

    Holds the reference values taken at ``t0`` (``M0``, ``Q0``, ``F0``), the
    resolved ``mu`` and the previous record, so a run can be checkpointed and
    resumed with identical flags.
    """

    t0: float
    mu_setting: float | str = "auto"
    c_est: float = 10.0
    tol_decay: float = 0.05
    tol_mono: float = 1e-3
    tol_hess: float = 0.05
    deturck: bool = False
    evolve_metric: bool = True
    couple_u: bool = True
    mu: float | None = None
    m0: float | None = None
    q0: float | None = None
    f0: float | None = None
    last: DiagnosticsRecord | None = None

    @classmethod
    def from_config(cls, config) -> DiagnosticsMonitor:
        return cls(t0=config.t0, mu_setting=config.mu, c_est=config.c_est, tol_decay=config.tol_decay,
                   tol_mono=config.tol_mono, tol_hess=config.tol_hess, deturck=config.deturck,
                   evolve_metric=config.evolve_metric, couple_u=config.couple_u)

    def record(self, t: float, u, cache: GeometryCache, prev=None) -> DiagnosticsRecord:
        """Build the record for state ``(t, ., u)``.

        ``prev`` is ``(prev_cache, dt)`` from the immediately preceding accepted
        step, or ``None`` for the first record.
        """
        grad_sq = cache.grad_u_norm_sq
        hess_sq = cache.hess_u_norm_sq
        sup_grad = float(np.max(grad_sq))
        sup_hess = float(np.max(hess_sq))
        sup_rm = float(np.sqrt(max(np.max(cache.riemann_norm_sq), 0.0)))
        sup_ric = float(np.max(cache.ricci_op_norm))
        if self.mu is None:
            self.mu = resolve_mu(self.mu_setting, sup_rm, sup_grad, self.c_est)
        elapsed = t - self.t0
        sup_f = float(np.max(hess_sq + self.mu * grad_sq))
        sup_f1 = float(np.max(elapsed * hess_sq + self.mu * grad_sq))
        mono_q = float(np.max(elapsed * grad_sq + u * u))
        if self.m0 is None:
            self.m0, self.q0, self.f0 = sup_grad, mono_q, sup_f

        residual = 0.0
        hess_ok = True
        if prev is not None:
            prev_cache, dt = prev
            residual = check_grad_identity_residual(
                prev_cache, cache, dt, deturck=self.deturck,
                evolve_metric=self.evolve_metric, couple_u=self.couple_u)
            hess_ok = check_hessian_inequality(prev_cache, cache, dt, self.c_est,
                                               tol=self.tol_hess, deturck=self.deturck)

        if self.m0 > 0:
            thm1_ok = sup_grad <= thm1_bound(self.m0, t, self.t0) * (1.0 + self.tol_decay)
        else:
            thm1_ok = sup_grad <= 0.0
        if self.last is None:
            mono_ok = f_ok = True
        else:
            mono_ok = mono_q <= self.last.mono_Q + self.tol_mono * (1.0 + self.q0)
            f_ok = sup_f <= self.last.sup_F + self.tol_mono * (1.0 + self.f0)

        rec = DiagnosticsRecord(
            t=t, sup_grad_u_sq=sup_grad, sup_hess_u_sq=sup_hess, sup_ric=sup_ric, sup_rm=sup_rm,
            osc_u=float(np.max(u) - np.min(u)), sup_F=sup_f, sup_F1=sup_f1,
            t_sup_rm=t * sup_rm, t_sup_hess=t * sup_hess, t_sup_grad=t * sup_grad,
            mono_Q=mono_q, residual_grad_identity=residual,
            thm1_decay_ok=bool(thm1_ok), mono_ok=bool(mono_ok), F_monotone_ok=bool(f_ok),
            hess_ineq_ok=bool(hess_ok),
        )
        self.last = rec
        return rec

    def to_dict(self) -> dict:
        d = asdict(self)
        d["last"] = None if self.last is None else self.last.as_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DiagnosticsMonitor:
        d = dict(d)
        last = d.pop("last", None)
        mon = cls(**d)
        mon.last = None if last is None else DiagnosticsRecord(**last)
        return mon


def make_record(state, cache: GeometryCache, config, prev=None, monitor: DiagnosticsMonitor | None = None):
    """Record for ``state``; a fresh monitor treats it as the first record of a run."""
    if monitor is None:
        monitor = DiagnosticsMonitor.from_config(config)
    return monitor.record(state.t, state.u, cache, prev)


def check_thm1_decay(records, m0: float, t0: float, tol: float = 0.05) -> list[bool]:
    """Per-record test of ``sup|du|^2(t) <= M0 / (1 + 2 M0 (t - t0)) (1 + tol)``."""
    if m0 <= 0:
        if any(r.sup_grad_u_sq > 0 for r in records):
            raise ValueError("M0 must be positive when u is not constant")
        return [True] * len(records)
    return [r.sup_grad_u_sq <= thm1_bound(m0, r.t, t0) * (1.0 + tol) for r in records]


def check_monotone_quantity(records, tol: float = 1e-3) -> bool:
    """``mono_Q`` nonincreasing up to ``tol (1 + mono_Q(t0))`` per record."""
    if len(records) < 2:
        raise ValueError("need at least two records")
    slack = tol * (1.0 + records[0].mono_Q)
    return all(b.mono_Q <= a.mono_Q + slack for a, b in zip(records, records[1:]))


@dataclass(frozen=True)
class FMonotoneResult:
    status: str  # "pass", "fail" or "inconclusive"
    first_violation: int | None
    mu: float
    mu_required: float

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def check_F_monotone(records, mu: float, tol: float = 1e-3, c_est: float = 10.0) -> FMonotoneResult:
    """``sup F`` nonincreasing per record, with ``mu`` re-verified against the whole run.

    ``mu`` must be at least ``2 c_est max_t (sup|Rm| + sup|du|^2)``; below that
    the outcome is ``"inconclusive"`` rather than a failure.
    """
    required = 2.0 * c_est * max((r.sup_rm + r.sup_grad_u_sq for r in records), default=0.0)
    slack = tol * (1.0 + records[0].sup_F) if records else 0.0
    first = next((i + 1 for i, (a, b) in enumerate(zip(records, records[1:]))
                  if b.sup_F > a.sup_F + slack), None)
    if mu < required * (1.0 - 1e-12):
        status = "inconclusive"
    else:
        status = "pass" if first is None else "fail"
    return FMonotoneResult(status, first, float(mu), required)


@dataclass(frozen=True)
class TypeIIISummary:
    max_monitor: float
    slope: float
    bounded: bool


def check_typeIII_monitors(records, max_slope: float = 0.1) -> TypeIIISummary:
    """Boundedness surrogate for ``t (|Rm| + |D^2u|^2 + |du|^2) <= C``.

    Fits ``log(monitor)`` against ``log(t)`` over the second half of the run
    (by time) and calls the sequence bounded when the slope is at most
    ``max_slope``.
    """
    if not records:
        raise ValueError("no records")
    if records[0].t <= 0:
        raise ValueError("type III monitors need a positive start time")
    mon = np.array([r.typeIII_monitor for r in records])
    t = np.array([r.t for r in records])
    mid = 0.5 * (t[0] + t[-1])
    sel = (t >= mid) & (mon > 0)
    if sel.sum() < 2:
        slope = 0.0
    else:
        slope = float(np.polyfit(np.log(t[sel]), np.log(mon[sel]), 1)[0])
    return TypeIIISummary(float(mon.max()), slope, slope <= max_slope)
