"""Run manifests from flat ``key = value`` files plus command-line overrides.

Unknown keys are rejected so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .flow import FlowConfig
from .grid import PeriodicGrid
from .scenarios import SCENARIOS

__all__ = ["ConfigError", "RunManifest", "KEYS", "REQUIRED", "parse_config", "parse_config_text"]


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def _mu(text: str):
    return "auto" if text.strip().lower() == "auto" else float(text)


def _grid_sizes(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.lower().split("x"))


def _str(text: str) -> str:
    return text.strip()


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


# key -> (parser, default); defaults of None mean "not set"
KEYS = {
    "scenario": (_str, None),
    "grid": (_grid_sizes, None),
    "t_end": (float, None),
    "t0": (float, 0.0),
    "period": (float, 2 * math.pi),
    "amplitude": (_opt_float, None),
    "cfl": (float, 0.2),
    "order": (int, 2),
    "integrator": (_str, "rk4"),
    "deturck": (_bool, True),
    "mu": (_mu, "auto"),
    "lambda_min": (float, 1e-8),
    "output_every": (int, 10),
    "evolve_metric": (_bool, True),
    "couple_u": (_bool, True),
    "c_est": (float, 10.0),
    "tol_decay": (float, 0.05),
    "tol_mono": (float, 1e-3),
    "tol_hess": (float, 0.05),
    "dt": (_opt_float, None),
    "out": (_str, "records.csv"),
    "checkpoint": (_str, None),
    "checkpoint_every": (int, 0),
}
REQUIRED = ("scenario", "grid", "t_end")
_FLOW_KEYS = ("t0", "t_end", "cfl", "integrator", "order", "deturck", "mu", "lambda_min", "output_every",
              "evolve_metric", "couple_u", "c_est", "tol_decay", "tol_mono", "tol_hess", "dt")


@dataclass(frozen=True)
class RunManifest:
    scenario: str
    grid: PeriodicGrid
    config: FlowConfig
    out: Path
    checkpoint: Path | None = None
    checkpoint_every: int = 0
    amplitude: float | None = None
    version: str = __version__

    def as_dict(self) -> dict:
        cfg = {k: getattr(self.config, k) for k in _FLOW_KEYS}
        return {
            "scenario": self.scenario,
            "grid": "x".join(map(str, self.grid.sizes)),
            "period": self.grid.periods[0],
            "amplitude": self.amplitude,
            "out": str(self.out),
            "checkpoint": None if self.checkpoint is None else str(self.checkpoint),
            "checkpoint_every": self.checkpoint_every,
            "version": self.version,
            **cfg,
        }


def _parse_lines(text: str, source: str) -> dict[str, str]:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = value
    return raw


def parse_config_text(text: str = "", overrides: dict | None = None, source: str = "<config>") -> RunManifest:
    raw = _parse_lines(text, source)
    for key, value in (overrides or {}).items():
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            raw[key] = value if isinstance(value, str) else str(value)

    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    values = {}
    for key, (parse, default) in KEYS.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw[key]!r} ({exc})") from None
        else:
            values[key] = default

    if values["scenario"] not in SCENARIOS:
        raise ConfigError(f"unknown scenario {values['scenario']!r}; choose from {sorted(SCENARIOS)}")
    if values["checkpoint_every"] < 0:
        raise ConfigError("checkpoint_every must be non-negative")
    if values["checkpoint_every"] and not values["checkpoint"]:
        raise ConfigError("checkpoint_every needs a checkpoint path")
    try:
        sizes = values["grid"]
        grid = PeriodicGrid(sizes, (values["period"],) * len(sizes))
        config = FlowConfig(**{k: values[k] for k in _FLOW_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunManifest(
        scenario=values["scenario"],
        grid=grid,
        config=config,
        out=Path(values["out"]),
        checkpoint=Path(values["checkpoint"]) if values["checkpoint"] else None,
        checkpoint_every=values["checkpoint_every"],
        amplitude=values["amplitude"],
    )


def parse_config(path=None, overrides: dict | None = None) -> RunManifest:
    """Resolve a manifest from an optional config file; ``overrides`` (flags) win."""
    text = Path(path).read_text() if path is not None else ""
    return parse_config_text(text, overrides, source=str(path) if path else "<flags>")
