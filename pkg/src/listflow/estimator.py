"""scikit-learn style front end.

:class:`ListFlowSimulator` exposes the integration parameters as estimator
hyper-parameters (``get_params``/``set_params``, ``clone``), ``fit`` runs the
flow from an initial state and stores the diagnostics, and ``transform``
evolves a state to ``t_end``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .diagnostics import check_F_monotone, check_monotone_quantity, check_thm1_decay, check_typeIII_monitors
from .flow import FlowConfig, FlowState, run
from .geometry import DEFAULT_LAMBDA_MIN
from .validation import check_state

__all__ = ["ListFlowSimulator"]


class ListFlowSimulator(TransformerMixin, BaseEstimator):
    """Integrate the warped-product flow and verify its bounds along the way.

    Parameters mirror :class:`~listflow.flow.FlowConfig`; ``t0`` is taken
    from the state handed to :meth:`fit`.

    Attributes
    ----------
    records_ : list of DiagnosticsRecord
    final_state_ : FlowState
    status_ : str
        ``"completed"`` or ``"degenerate"``.
    mu_ : float
        The resolved monitor weight.
    n_steps_ : int
    """

    def __init__(self, t_end=1.0, cfl=0.2, integrator="rk4", order=2, deturck=True, mu="auto",
                 lambda_min=DEFAULT_LAMBDA_MIN, output_every=10, evolve_metric=True, couple_u=True,
                 c_est=10.0, tol_decay=0.05, tol_mono=1e-3, tol_hess=0.05, dt=None):
        self.t_end = t_end
        self.cfl = cfl
        self.integrator = integrator
        self.order = order
        self.deturck = deturck
        self.mu = mu
        self.lambda_min = lambda_min
        self.output_every = output_every
        self.evolve_metric = evolve_metric
        self.couple_u = couple_u
        self.c_est = c_est
        self.tol_decay = tol_decay
        self.tol_mono = tol_mono
        self.tol_hess = tol_hess
        self.dt = dt

    def _config(self, t0: float) -> FlowConfig:
        params = self.get_params()
        return FlowConfig(t0=t0, **params)

    def fit(self, X, y=None):
        """Run the flow from state ``X`` to ``t_end``."""
        state = check_state(X)
        config = self._config(state.t)
        result = run(state, config)
        self.config_ = config
        self.records_ = result.records
        self.final_state_ = result.final_state
        self.status_ = result.status
        self.n_steps_ = result.n_steps
        self.mu_ = result.monitor.mu
        self.monitor_ = result.monitor
        return self

    def transform(self, X) -> FlowState:
        """Evolve ``X`` to ``t_end`` with this estimator's parameters."""
        state = check_state(X)
        return run(state, self._config(state.t)).final_state

    def fit_transform(self, X, y=None, **fit_params) -> FlowState:
        return self.fit(X).final_state_

    def summarize(self) -> dict:
        """Post-hoc verdicts over the stored records."""
        check_is_fitted(self, "records_")
        recs = self.records_
        m0 = recs[0].sup_grad_u_sq
        out = {
            "status": self.status_,
            "steps": self.n_steps_,
            "flags_ok": all(r.all_ok for r in recs),
            "thm1_decay": all(check_thm1_decay(recs, m0, self.config_.t0, self.tol_decay)),
        }
        if len(recs) >= 2:
            out["monotone_quantity"] = check_monotone_quantity(recs, self.tol_mono)
            out["F_monotone"] = check_F_monotone(recs, self.mu_, self.tol_mono, self.c_est).status
        if self.config_.t0 > 0:
            out["typeIII"] = check_typeIII_monitors(recs)
        out["osc_ratio"] = recs[-1].osc_u / recs[0].osc_u if recs[0].osc_u > 0 else float(np.nan)
        return out
