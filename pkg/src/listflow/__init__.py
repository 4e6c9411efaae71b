"""Numerical warped-product Ricci flow (List flow) on flat tori, with runtime bound checks."""

__version__ = "0.1.0"

from .diagnostics import DiagnosticsMonitor, DiagnosticsRecord, make_record  # noqa: E402
from .estimator import ListFlowSimulator  # noqa: E402
from .flow import FlowConfig, FlowState, RunResult, run, step  # noqa: E402
from .geometry import GeometryCache, MetricDegenerationError, build_cache  # noqa: E402
from .grid import PeriodicGrid  # noqa: E402
from .scenarios import SCENARIOS, instantiate  # noqa: E402
from .warped import assemble_warped, cross_check  # noqa: E402

__all__ = [
    "__version__",
    "DiagnosticsMonitor",
    "DiagnosticsRecord",
    "FlowConfig",
    "FlowState",
    "GeometryCache",
    "ListFlowSimulator",
    "MetricDegenerationError",
    "PeriodicGrid",
    "RunResult",
    "SCENARIOS",
    "assemble_warped",
    "build_cache",
    "cross_check",
    "instantiate",
    "make_record",
    "run",
    "step",
]
