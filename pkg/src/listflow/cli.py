"""Command line entry point: ``listflow run | resume | crosscheck``.

Exit status: 0 when every enabled check passes, 2 on a check failure,
3 when the metric degenerates, 1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunManifest, parse_config
from .diagnostics import check_F_monotone, check_typeIII_monitors
from .flow import RunResult, run
from .geometry import build_cache
from .persistence import CheckpointFormatError, load_run_checkpoint, save_run_checkpoint, write_records
from .scenarios import default_grid, instantiate
from .warped import assemble_warped, cross_check, fit_rate

logger = logging.getLogger("listflow")

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_DEGENERATE = 0, 1, 2, 3
DEFAULT_RESOLUTIONS = (32, 64, 128)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def report_cross_check(scenario: str, resolutions=DEFAULT_RESOLUTIONS, order: int = 2,
                       fiber_size: int = 8, amplitude: float | None = None) -> dict:
    """Warped-product cross-check over a refinement ladder.

    Returns per-resolution block discrepancies and least-squares convergence
    rates.  Blocks whose discrepancy stays at roundoff report a rate of None.
    """
    rows = []
    for size in resolutions:
        grid = default_grid(scenario, size)
        state = instantiate(scenario, grid, amplitude=amplitude)
        cache = build_cache(state.h, state.u, grid, order)
        wm = assemble_warped(state.h, state.u, grid, fiber_size=fiber_size)
        rep = cross_check(wm, cache, order)
        rows.append({"resolution": size, **rep.as_dict()})
    dx = [r["dx"] for r in rows]
    rates = {block: fit_rate(dx, [r[block] for r in rows]) for block in ("base", "fiber", "scalar")}
    min_rate = order - 0.4
    ok = all(rate is None or rate >= min_rate for rate in rates.values())
    return {
        "scenario": scenario,
        "order": order,
        "fiber_size": fiber_size,
        "resolutions": rows,
        "rates": rates,
        "min_rate": min_rate,
        "pass": bool(ok),
        "version": __version__,
    }


def _checkpointer(manifest: RunManifest):
    if not (manifest.checkpoint and manifest.checkpoint_every):
        return None

    def on_step(n, state, monitor):
        if n % manifest.checkpoint_every == 0:
            save_run_checkpoint(state, n, monitor, manifest.checkpoint,
                                extra={"scenario": manifest.scenario})
    return on_step


def summarize(result: RunResult, manifest: RunManifest) -> tuple[int, dict]:
    records = result.records
    summary = {
        "status": result.status,
        "steps": result.n_steps,
        "records": len(records),
        "t_final": result.final_state.t,
        "mu": result.monitor.mu,
        "flags_ok": result.flags_ok,
    }
    failed = not result.flags_ok
    if len(records) >= 2:
        fres = check_F_monotone(records, result.monitor.mu, manifest.config.tol_mono, manifest.config.c_est)
        summary["F_monotone"] = fres.status
        failed |= fres.status == "fail"
        if result.monitor.t0 > 0:
            typ = check_typeIII_monitors(records)
            summary["typeIII"] = {"max_monitor": typ.max_monitor, "slope": typ.slope, "bounded": typ.bounded}
            failed |= not typ.bounded
    if result.status == "degenerate":
        summary["degeneration"] = result.message
        return EXIT_DEGENERATE, summary
    return (EXIT_CHECK if failed else EXIT_OK), summary


def _cmd_run(args) -> int:
    overrides = {k: getattr(args, k) for k in ("scenario", "grid", "t0", "t_end", "cfl", "order", "integrator",
                                                "deturck", "mu", "out", "checkpoint_every", "checkpoint",
                                                "output_every", "period", "amplitude")}
    manifest = parse_config(args.config, overrides)
    state = instantiate(manifest.scenario, manifest.grid, manifest.config.t0, manifest.amplitude)
    result = run(state, manifest.config, on_step=_checkpointer(manifest))
    return _finish(result, manifest)


def _cmd_resume(args) -> int:
    overrides = {"out": args.out}
    try:
        state, n, monitor, meta = load_run_checkpoint(args.checkpoint)
    except (OSError, CheckpointFormatError) as exc:
        raise ConfigError(str(exc)) from None
    grid = "x".join(map(str, state.grid.sizes))
    manifest = parse_config(args.config, {"grid": grid, "scenario": meta.get("scenario"), **overrides})
    if manifest.grid.sizes != state.grid.sizes:
        raise ConfigError("checkpoint grid does not match the configuration")
    result = run(state, manifest.config, monitor=monitor, start_step=n, emit_initial=False,
                 on_step=_checkpointer(manifest))
    return _finish(result, manifest)


def _finish(result: RunResult, manifest: RunManifest) -> int:
    write_records(result.records, manifest.out)
    code, summary = summarize(result, manifest)
    summary["out"] = str(manifest.out)
    print(json.dumps(summary, indent=1))
    return code


def _cmd_crosscheck(args) -> int:
    resolutions = tuple(int(r) for r in args.resolutions.split(","))
    report = report_cross_check(args.scenario, resolutions, args.order, args.fiber_size, args.amplitude)
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if report["pass"] else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="listflow", description="Warped-product Ricci (List) flow simulator and bound checker")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="integrate a scenario and write diagnostics CSV")
    p.add_argument("--config")
    p.add_argument("--scenario")
    p.add_argument("--grid", help="node counts, e.g. 64x64")
    p.add_argument("--t0")
    p.add_argument("--t-end", dest="t_end")
    p.add_argument("--cfl")
    p.add_argument("--order", choices=["2", "4"])
    p.add_argument("--integrator", choices=["euler", "rk2", "rk4"])
    p.add_argument("--deturck", choices=["on", "off"])
    p.add_argument("--mu", help="'auto' or a non-negative number")
    p.add_argument("--out")
    p.add_argument("--checkpoint-every", dest="checkpoint_every")
    p.add_argument("--checkpoint")
    p.add_argument("--output-every", dest="output_every")
    p.add_argument("--period")
    p.add_argument("--amplitude")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("resume", help="continue a checkpointed run")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_resume)

    p = sub.add_parser("crosscheck", help="warped-product curvature refinement study")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.add_argument("--order", type=int, choices=[2, 4], default=2)
    p.add_argument("--resolutions", default=",".join(map(str, DEFAULT_RESOLUTIONS)))
    p.add_argument("--fiber-size", dest="fiber_size", type=int, default=8)
    p.add_argument("--amplitude", type=float)
    p.set_defaults(func=_cmd_crosscheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"listflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
