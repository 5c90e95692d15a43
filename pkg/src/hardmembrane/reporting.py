"""CSV emission, run manifests, and the flat ``key = value`` config format.

CSV files are byte-reproducible for a fixed seed: floats are printed with 17
significant digits (round-trip exact for doubles), rows end with LF, and no
timestamps enter the data files.  Path files carry ``t,value`` plus optional
``local_time`` and ``sign`` columns; report files carry one row per metric.
"""

from __future__ import annotations

import difflib
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path as FsPath
from typing import Iterable

import numpy as np

from .montecarlo import ExperimentConfig, McReport
from .paths import TimeGrid

REPORT_HEADER = "metric,estimate,stderr,ci_lo,ci_hi,statistic,critical,pass"


class ConfigError(ValueError):
    """Malformed or unknown configuration input."""


def fmt(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_path_csv(out_path, t: np.ndarray, value: np.ndarray,
                   local_time: np.ndarray | None = None,
                   sign: np.ndarray | None = None) -> None:
    cols = ["t", "value"]
    if local_time is not None:
        cols.append("local_time")
    if sign is not None:
        cols.append("sign")
    lines = [",".join(cols)]
    for i in range(len(t)):
        row = [fmt(t[i]), fmt(value[i])]
        if local_time is not None:
            row.append(fmt(local_time[i]))
        if sign is not None:
            row.append(str(int(sign[i])))
        lines.append(",".join(row))
    FsPath(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_report_csv(out_path, reports: Iterable[McReport]) -> None:
    lines = [REPORT_HEADER]
    for r in reports:
        lines.append(",".join([
            r.metric, fmt(r.estimate), fmt(r.stderr), fmt(r.ci_lo), fmt(r.ci_hi),
            fmt(r.statistic), fmt(r.critical), "true" if r.passed else "false",
        ]))
    FsPath(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class RunManifest:
    """What a CLI invocation resolved to and which files it wrote."""

    preset: str
    config: dict
    version: str
    timestamp: str
    outputs: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, out_path) -> None:
        FsPath(out_path).write_text(self.to_json() + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Flat key = value configuration


_KNOWN_KEYS: dict[str, type] = {
    "process": str,
    "estimator": str,
    "preset": str,
    "n_paths": int,
    "seed": int,
    "threads": int,
    "z": float,
    "ks_level": float,
    "grid.horizon": float,
    "grid.n_steps": int,
    "x0": float,
    "t": float,
    "dt": float,
    "epsilon": float,
    "epsilon_list": str,
    "alpha": float,
    "beta": float,
    "theta": float,
    "gamma": float,
    "L": float,
    "delta": float,
    "p_hit": float,
    "side": str,
    "alpha_plus": float,
    "alpha_minus": float,
    "initial_sign": int,
    "drift.family": str,
    "drift.lam": float,
    "drift.c_plus": float,
    "drift.c_minus": float,
}

_TOP_LEVEL = {"process", "estimator", "n_paths", "seed", "threads", "z", "ks_level"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse the flat UTF-8 ``key = value`` format with ``#`` comments.

    Unknown keys are hard errors that name the nearest valid key; values are
    validated against the expected type of each key.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KNOWN_KEYS:
            near = difflib.get_close_matches(key, _KNOWN_KEYS, n=1)
            hint = f" (did you mean {near[0]!r}?)" if near else ""
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}{hint}")
        caster = _KNOWN_KEYS[key]
        try:
            values[key] = caster(val)
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: value for {key!r} must be {caster.__name__}, got {val!r}"
            ) from None
    return values


def load_config(path) -> ExperimentConfig:
    """Load an `ExperimentConfig` from a flat config file."""
    p = FsPath(path)
    values = parse_config_text(p.read_text(encoding="utf-8"), source=str(p))
    return config_from_values(values)


def config_from_values(values: dict) -> ExperimentConfig:
    grid = None
    if "grid.horizon" in values or "grid.n_steps" in values:
        if not ("grid.horizon" in values and "grid.n_steps" in values):
            raise ConfigError("grid.horizon and grid.n_steps must be given together")
        grid = TimeGrid(values["grid.horizon"], values["grid.n_steps"])
    params = {k: v for k, v in values.items()
              if k not in _TOP_LEVEL and not k.startswith("grid.")}
    return ExperimentConfig(
        process=values.get("process", ""),
        n_paths=values.get("n_paths", 1),
        seed=values.get("seed", 0),
        grid=grid,
        estimator=values.get("estimator", ""),
        z=values.get("z", 3.0),
        ks_level=values.get("ks_level", 0.01),
        threads=values.get("threads", 1),
        params=params,
    )


def parse_epsilon_list(text: str) -> list[float]:
    try:
        out = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"epsilon_list must be comma-separated floats, got {text!r}") from None
    if not out:
        raise ConfigError("epsilon_list is empty")
    return out


def report_lines(reports: Iterable[McReport]) -> list[str]:
    """Human-readable one-line summaries, one per report."""
    out = []
    for r in reports:
        bits = [f"{r.metric}: estimate={r.estimate:.6g}"]
        if not math.isnan(r.stderr):
            bits.append(f"stderr={r.stderr:.3g}")
        if not math.isnan(r.statistic):
            bits.append(f"stat={r.statistic:.4g}")
        if not math.isnan(r.critical):
            bits.append(f"crit={r.critical:.4g}")
        if "target" in r.meta:
            bits.append(f"target={r.meta['target']:.6g}")
        bits.append("PASS" if r.passed else "FAIL")
        out.append("  ".join(bits))
    return out
