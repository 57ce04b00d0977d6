"""Command-line front end: ``treecover <experiment> [options]``.

Parameters come from the experiment defaults, then an optional JSON config
file, then command-line flags. The effective parameters are echoed into the
report. Exit codes: 0 when every test passes, 1 when some test fails, 2 for
usage errors and 3 for a numeric failure (a partial report is still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import NumericError
from .experiments import EXPERIMENTS, run_experiment
from .report import ExperimentReport, emit

RUN_KEYS = ("seed", "workers", "out", "format")
FLAG_KEYS = {
    "n": ("n",), "k": ("k",), "s": ("s",), "u": ("u",), "eta": ("eta",), "eta_prime": ("eta_prime",),
    "t": ("t",), "depth": ("depth",), "dt": ("dt",), "replicas": ("replicas", "samples"),
}
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="treecover", description="Random walk cover-time and local-time experiments.")
    ap.add_argument("experiment", choices=sorted([*EXPERIMENTS, "full-suite"]))
    ap.add_argument("--config", type=Path, help="JSON file with a flat parameter map")
    ap.add_argument("--n", type=int)
    ap.add_argument("--k", type=int)
    ap.add_argument("--s", type=float)
    ap.add_argument("--u", type=float)
    ap.add_argument("--eta", type=float)
    ap.add_argument("--eta-prime", dest="eta_prime", type=float)
    ap.add_argument("--t", type=float)
    ap.add_argument("--depth", type=int, help="truncation depth")
    ap.add_argument("--dt", type=float)
    ap.add_argument("--replicas", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out", type=Path)
    ap.add_argument("--format", choices=["json", "csv", "both"])
    return ap


def load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"cannot read config {path}: {e}") from e
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def resolve(args: argparse.Namespace, env=os.environ) -> tuple[dict, dict]:
    """Merge config file, flags and environment into ``(params, run options)``."""
    cfg = load_config(args.config)
    params = dict(cfg.get("params", {}))
    params.update({k: v for k, v in cfg.items() if k not in RUN_KEYS and k != "params"})
    for flag, keys in FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            for key in keys:
                params[key] = value
    seed = args.seed if args.seed is not None else cfg.get("seed", env.get("TREECOVER_SEED", 0))
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ValueError(f"seed {seed!r} is not an integer")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    workers = int(args.workers if args.workers is not None else cfg.get("workers", 1))
    if workers < 1:
        raise ValueError("workers must be positive")
    run = {
        "seed": seed,
        "workers": workers,
        "out": Path(args.out if args.out is not None else cfg.get("out", "reports")),
        "format": args.format or cfg.get("format", "both"),
    }
    if run["format"] not in ("json", "csv", "both"):
        raise ValueError(f"unknown format {run['format']!r}")
    return params, run


def run(experiment: str, params: dict, seed: int, workers: int, out: Path, fmt: str) -> int:
    report = ExperimentReport(experiment)
    code = EXIT_OK
    try:
        run_experiment(experiment, params, seed, workers, report)
    except (NumericError, FloatingPointError, ArithmeticError) as e:
        report.notes.append(f"numeric failure: {e}")
        code = EXIT_NUMERIC
    for t in report.tests:
        print(f"{'PASS' if t.passed else 'FAIL'}  {t.name}  statistic={t.statistic}")
    for path in emit(report, out, fmt):
        print(f"wrote {path}")
    if code == EXIT_OK and not report.passed:
        code = EXIT_FAIL
    return code


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        params, opts = resolve(args)
    except ValueError as e:
        ap.print_usage(sys.stderr)
        print(f"treecover: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return run(args.experiment, params, opts["seed"], opts["workers"], opts["out"], opts["format"])


if __name__ == "__main__":
    sys.exit(main())
