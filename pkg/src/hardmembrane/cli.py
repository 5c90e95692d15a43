"""Command line interface.

Subcommands: ``sample`` (write path CSVs), ``calibrate`` (drift-strength
table), ``hitprob`` (Monte Carlo crossing probability vs quadrature) and
``verify`` (named verification presets).  Exit codes: 0 success, 1 a
statistical gate failed, 2 usage or parameter validation, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path as FsPath


from . import __version__
from .driftscale import builtin_drift, calibrate_L, hitting_prob_analytic
from .montecarlo import estimate_hitting_prob
from .paths import RngStream, TimeGrid, sample_wiener
from .processes import (
    HardMembraneParams,
    SkewParams,
    sample_hard_membrane,
    sample_reflected_bm,
    sample_skew_bm,
)
from .presets import PRESETS, run_preset
from .reporting import (
    ConfigError,
    RunManifest,
    fmt,
    load_config,
    parse_epsilon_list,
    report_lines,
    write_path_csv,
    write_report_csv,
)

EXIT_OK = 0
EXIT_STAT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("HARDMEMBRANE_THREADS", "1")))
    except ValueError:
        return 1


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    p.add_argument("--threads", type=int, default=None, help="worker thread cap")
    p.add_argument("--out", default=None, help="output file or stem")


def _resolve(args, key: str, default):
    """Precedence: CLI flag, then config file, then default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if getattr(args, "_config", None) is not None:
        cfg = args._config
        if key == "seed":
            return cfg.seed
        if key == "threads":
            return cfg.threads
        if key in cfg.params:
            return cfg.params[key]
    return default


def _load_config_if_any(args) -> None:
    args._config = load_config(args.config) if args.config else None


def _drift_from_args(args):
    family = getattr(args, "family", "step")
    if family == "step":
        return builtin_drift("step")
    return builtin_drift("signpower", lam=args.lam, c_plus=args.c_plus,
                         c_minus=args.c_minus)


def _manifest(preset: str, config: dict, outputs: list[str]) -> RunManifest:
    return RunManifest(
        preset=preset,
        config=config,
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
        outputs=outputs,
    )


# ---------------------------------------------------------------------------
# sample


def cmd_sample(args) -> int:
    grid = TimeGrid(args.horizon, args.steps)
    seed = _resolve(args, "seed", 0)
    out = args.out or f"{args.process.replace('-', '_')}_path"
    stem = FsPath(out).with_suffix("")
    outputs = []
    for i in range(args.n_paths):
        stream = RngStream(seed, i)
        if args.process == "wiener":
            p = sample_wiener(grid, args.x0, stream)
            cols = {"value": p.values}
        elif args.process == "reflected":
            g, l = sample_reflected_bm(grid, args.x0, args.side, stream)
            cols = {"value": g.values, "local_time": l.values}
        elif args.process == "skew":
            p = sample_skew_bm(grid, args.x0, SkewParams(args.gamma), stream)
            cols = {"value": p.values}
        elif args.process == "hard-membrane":
            params = HardMembraneParams(args.alpha_plus, args.alpha_minus,
                                        args.initial_sign)
            hm = sample_hard_membrane(grid, args.x0, params, stream)
            cols = {"value": hm.path.values, "local_time": hm.local_time.values,
                    "sign": hm.sign.sample(grid)}
        else:  # pragma: no cover - argparse restricts choices
            raise ValueError(f"unknown process {args.process!r}")
        path = f"{stem}.csv" if args.n_paths == 1 else f"{stem}_{i:04d}.csv"
        write_path_csv(path, grid.times(), cols["value"],
                       cols.get("local_time"), cols.get("sign"))
        outputs.append(path)
    _manifest("sample", {"process": args.process, "seed": seed,
                         "horizon": args.horizon, "n_steps": args.steps,
                         "x0": args.x0, "n_paths": args.n_paths},
              outputs).write(f"{stem}_manifest.json")
    print(f"wrote {len(outputs)} path file(s) to {stem}*.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibrate


def cmd_calibrate(args) -> int:
    d = _drift_from_args(args)
    alpha = _resolve(args, "alpha", 1.0)
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    eps_list = parse_epsilon_list(args.epsilon_list)
    rows = []
    print("epsilon,L,analytic_ratio")
    for eps in eps_list:
        cal = calibrate_L(d, alpha, eps)
        ratio = hitting_prob_analytic(d, cal.L_epsilon, eps) / (eps * alpha)
        rows.append((eps, cal.L_epsilon, ratio))
        print(f"{fmt(eps)},{fmt(cal.L_epsilon)},{fmt(ratio)}")
    out = args.out or "calibration"
    stem = FsPath(out).with_suffix("")
    csv_path = f"{stem}.csv"
    lines = ["epsilon,L,analytic_ratio"]
    lines += [f"{fmt(e)},{fmt(L)},{fmt(r)}" for e, L, r in rows]
    FsPath(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _manifest("calibrate", {"family": args.family, "alpha": alpha,
                            "epsilon_list": eps_list},
              [csv_path]).write(f"{stem}_manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# hitprob


def cmd_hitprob(args) -> int:
    d = _drift_from_args(args)
    seed = _resolve(args, "seed", 0)
    threads = _resolve(args, "threads", _default_threads())
    eps = args.epsilon
    L = args.L if args.L is not None else calibrate_L(d, args.alpha, eps).L_epsilon
    rep = estimate_hitting_prob(d, L, eps, args.n_paths, seed,
                                dt=args.dt, threads=threads)
    for line in report_lines([rep]):
        print(line)
    out = args.out or "hitprob"
    stem = FsPath(out).with_suffix("")
    csv_path = f"{stem}.csv"
    write_report_csv(csv_path, [rep])
    _manifest("hitprob", {"family": args.family, "L": L, "epsilon": eps,
                          "n_paths": args.n_paths, "seed": seed},
              [csv_path]).write(f"{stem}_manifest.json")
    return EXIT_OK if rep.passed else EXIT_STAT_FAIL


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    if args.preset not in PRESETS:
        print(f"error: unknown preset {args.preset!r}; available: "
              f"{', '.join(sorted(PRESETS))}", file=sys.stderr)
        return EXIT_USAGE
    seed = _resolve(args, "seed", 0)
    threads = _resolve(args, "threads", _default_threads())
    kwargs = {"seed": seed, "threads": threads}
    if args.n_paths is not None:
        kwargs["n_paths"] = args.n_paths
    if args.epsilon_list is not None:
        kwargs["eps_list"] = tuple(parse_epsilon_list(args.epsilon_list))
    reports = run_preset(args.preset, **kwargs)
    gates = [r for r in reports if not math.isnan(r.critical)]
    all_pass = all(r.passed for r in gates)
    print(f"preset {args.preset} ({len(gates)} gate(s)):")
    for line in report_lines(reports):
        print("  " + line)
    print("RESULT:", "PASS" if all_pass else "FAIL")
    out = args.out or f"verify_{args.preset.replace('-', '_')}"
    stem = FsPath(out).with_suffix("")
    csv_path = f"{stem}.csv"
    write_report_csv(csv_path, reports)
    _manifest(args.preset, {"seed": seed, "threads": threads,
                            **{k: v for k, v in kwargs.items() if k not in ("seed", "threads")}},
              [csv_path]).write(f"{stem}_manifest.json")
    return EXIT_OK if all_pass else EXIT_STAT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hardmembrane",
        description="Simulate and verify reflected, skew and hard-membrane "
                    "Brownian motion and its drift-layer approximations.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="sample paths to CSV")
    sp.add_argument("--process", required=True,
                    choices=["wiener", "reflected", "skew", "hard-membrane"])
    sp.add_argument("--x0", type=float, default=0.0)
    sp.add_argument("--horizon", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--n-paths", type=int, default=1)
    sp.add_argument("--side", choices=["positive", "negative"], default="positive")
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--alpha-plus", type=float, default=1.0)
    sp.add_argument("--alpha-minus", type=float, default=1.0)
    sp.add_argument("--initial-sign", type=int, default=1)
    _add_common(sp)
    sp.set_defaults(func=cmd_sample)

    cp = sub.add_parser("calibrate", help="drift-strength calibration table")
    cp.add_argument("--family", choices=["step", "signpower"], default="step")
    cp.add_argument("--lam", type=float, default=1.0)
    cp.add_argument("--c-plus", type=float, default=1.0)
    cp.add_argument("--c-minus", type=float, default=1.0)
    cp.add_argument("--alpha", type=float, default=None)
    cp.add_argument("--epsilon-list", default="1e-4,1e-6,1e-8,1e-10,1e-12")
    _add_common(cp)
    cp.set_defaults(func=cmd_calibrate)

    hp = sub.add_parser("hitprob", help="Monte Carlo layer-crossing probability")
    hp.add_argument("--family", choices=["step", "signpower"], default="step")
    hp.add_argument("--lam", type=float, default=1.0)
    hp.add_argument("--c-plus", type=float, default=1.0)
    hp.add_argument("--c-minus", type=float, default=1.0)
    hp.add_argument("--alpha", type=float, default=1.0)
    hp.add_argument("--L", type=float, default=None,
                    help="drift strength (default: calibrate from alpha)")
    hp.add_argument("--epsilon", type=float, required=True)
    hp.add_argument("--n-paths", type=int, default=100_000)
    hp.add_argument("--dt", type=float, default=None)
    _add_common(hp)
    hp.set_defaults(func=cmd_hitprob)

    vp = sub.add_parser("verify", help="run a named verification preset")
    vp.add_argument("preset")
    vp.add_argument("--n-paths", type=int, default=None)
    vp.add_argument("--epsilon-list", default=None)
    _add_common(vp)
    vp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        _load_config_if_any(args)
        return args.func(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
