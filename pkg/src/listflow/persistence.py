"""Record CSV and binary field checkpoints.

Checkpoint layout: one ASCII header line ``LFLAB1 dim s0 s1 [s2] L0 L1 [L2]``
followed by little-endian float64 values in row-major node order, the
``n(n+1)/2`` upper-triangle metric components and then ``u`` fastest.  Run
bookkeeping (time, step index, monitor state) goes to a JSON sidecar next to
the checkpoint so the binary layout stays exactly as documented.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsMonitor, DiagnosticsRecord
from .flow import FlowState
from .grid import PeriodicGrid, pack_sym, unpack_sym

__all__ = [
    "CSV_COLUMNS",
    "CheckpointFormatError",
    "write_records",
    "read_records",
    "format_record_row",
    "checkpoint",
    "restore",
    "save_run_checkpoint",
    "load_run_checkpoint",
]

MAGIC = "LFLAB1"
CSV_COLUMNS = (
    "t", "sup_grad_u_sq", "sup_hess_u_sq", "sup_ric", "sup_rm", "osc_u", "sup_F", "sup_F1",
    "t_sup_rm", "mono_Q", "residual_grad_identity",
    "thm1_decay_ok", "mono_ok", "F_monotone_ok", "hess_ineq_ok",
)
_FLAGS = ("thm1_decay_ok", "mono_ok", "F_monotone_ok", "hess_ineq_ok")


class CheckpointFormatError(ValueError):
    pass


def format_record_row(rec: DiagnosticsRecord) -> list[str]:
    row = []
    for name in CSV_COLUMNS:
        value = getattr(rec, name)
        row.append(("1" if value else "0") if name in _FLAGS else repr(float(value)))
    return row


def write_records(records, path) -> None:
    """CSV with the fixed header; floats as shortest round-trip decimals, flags as 0/1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(format_record_row(rec))


def read_records(path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        out = []
        for row in reader:
            vals = dict(zip(CSV_COLUMNS, row))
            kw = {k: (vals[k] == "1") if k in _FLAGS else float(vals[k]) for k in CSV_COLUMNS}
            kw["t_sup_hess"] = kw["t"] * kw["sup_hess_u_sq"]
            kw["t_sup_grad"] = kw["t"] * kw["sup_grad_u_sq"]
            out.append(DiagnosticsRecord(**kw))
    return out


def _header(grid: PeriodicGrid) -> bytes:
    parts = [MAGIC, str(grid.dim), *map(str, grid.sizes), *(repr(p) for p in grid.periods)]
    return (" ".join(parts) + "\n").encode("ascii")


def checkpoint(state: FlowState, path) -> None:
    """Write the fields of ``state`` in the binary checkpoint layout."""
    grid = state.grid
    comps = np.concatenate([pack_sym(state.h), state.u[None]])
    payload = np.ascontiguousarray(np.moveaxis(comps, 0, -1), dtype="<f8")
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_header(grid))
        fh.write(payload.tobytes(order="C"))
    os.replace(tmp, path)


def _read_fields(path):
    with open(path, "rb") as fh:
        line = fh.readline()
        data = fh.read()
    try:
        tokens = line.decode("ascii").split()
    except UnicodeDecodeError:
        raise CheckpointFormatError(f"{path}: header is not ASCII") from None
    if not tokens or tokens[0] != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {tokens[:1]}, expected {MAGIC}")
    try:
        dim = int(tokens[1])
        if len(tokens) != 2 + 2 * dim:
            raise ValueError
        sizes = tuple(int(s) for s in tokens[2:2 + dim])
        periods = tuple(float(p) for p in tokens[2 + dim:])
        grid = PeriodicGrid(sizes, periods)
    except (IndexError, ValueError) as exc:
        raise CheckpointFormatError(f"{path}: malformed header {line!r}") from exc
    ncomp = dim * (dim + 1) // 2 + 1
    expected = grid.n_nodes * ncomp * 8
    if len(data) != expected:
        raise CheckpointFormatError(f"{path}: payload has {len(data)} bytes, expected {expected}")
    arr = np.frombuffer(data, dtype="<f8").reshape(grid.shape + (ncomp,))
    comps = np.moveaxis(arr, -1, 0).astype(np.float64)
    return grid, unpack_sym(comps[:-1], dim), np.ascontiguousarray(comps[-1])


def _sidecar(path) -> Path:
    return Path(str(path) + ".json")


def restore(path) -> FlowState:
    """Read a checkpoint; the time comes from the sidecar when one exists, else 0."""
    grid, h, u = _read_fields(path)
    side = _sidecar(path)
    t = json.loads(side.read_text())["t"] if side.exists() else 0.0
    return FlowState(t, h, u, grid)


def save_run_checkpoint(state: FlowState, step: int, monitor: DiagnosticsMonitor, path, extra=None) -> None:
    checkpoint(state, path)
    meta = {"t": state.t, "step": step, "monitor": monitor.to_dict()}
    if extra:
        meta.update(extra)
    _sidecar(path).write_text(json.dumps(meta, indent=1))


def load_run_checkpoint(path) -> tuple[FlowState, int, DiagnosticsMonitor, dict]:
    """Restore ``(state, step, monitor, metadata)`` written by :func:`save_run_checkpoint`."""
    side = _sidecar(path)
    if not side.exists():
        raise CheckpointFormatError(f"{path}: missing run sidecar {side}")
    meta = json.loads(side.read_text())
    state = restore(path)
    return state, int(meta["step"]), DiagnosticsMonitor.from_dict(meta["monitor"]), meta
