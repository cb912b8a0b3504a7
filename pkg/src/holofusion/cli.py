"""Command-line entry point.

    holofusion run roc_design --out results/roc --trials 20000 --jobs 4
    holofusion validate --config my.yaml

On failure the process exits nonzero and writes a JSON error report to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from typing import List, Optional

from . import __version__
from .config import SCENARIOS, ExperimentConfig, load, validate

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2


def _report(kind: str, message: str, code: int, **extra) -> int:
    doc = {"status": "error", "kind": kind, "message": message, "exit_code": code}
    doc.update(extra)
    sys.stderr.write(json.dumps(doc, indent=1) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holofusion", description="Decision fusion with a holographic receiver.")
    p.add_argument("--version", action="version", version=f"holofusion {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write CSV/JSON artifacts")
    r.add_argument("scenario", help=f"one of: {', '.join(SCENARIOS)}")
    r.add_argument("--config", help="YAML file with parameter overrides")
    r.add_argument("--out", help="output directory")
    r.add_argument("--seed", type=int, help="master seed override")
    r.add_argument("--trials", type=int, help="Monte Carlo trials per hypothesis")
    r.add_argument("--redraws", type=int, help="channel redraws averaged per point")
    r.add_argument("--jobs", type=int, help="worker processes")

    v = sub.add_parser("validate", help="check a config file and list violations")
    v.add_argument("--config", help="YAML file (defaults are checked when omitted)")
    v.add_argument("--scenario", help="scenario override")
    return p


def _resolve(args) -> ExperimentConfig:
    cfg = load(args.config) if args.config else ExperimentConfig()
    scenario = getattr(args, "scenario", None)
    return cfg.replace(scenario=scenario, output_dir=getattr(args, "out", None),
                       seed=getattr(args, "seed", None), trials=getattr(args, "trials", None),
                       redraws=getattr(args, "redraws", None), jobs=getattr(args, "jobs", None))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        if exc.code in (0, None):
            return EXIT_OK
        return _report("usage", "invalid command line", EXIT_INVALID)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
    except (OSError, ValueError, TypeError) as exc:
        return _report("config", str(exc), EXIT_INVALID)

    problems = validate(cfg)
    if args.command == "validate":
        print(json.dumps({"status": "ok" if not problems else "invalid", "violations": problems}, indent=1))
        return EXIT_OK if not problems else EXIT_INVALID
    if problems:
        return _report("validation", "invalid config", EXIT_INVALID, violations=problems)

    from .experiments import run  # deferred: keeps `validate` light

    try:
        written = run(cfg)
    except OSError as exc:
        return _report("io", str(exc), EXIT_RUNTIME, scenario=cfg.scenario)
    except Exception as exc:
        return _report("compute", f"{type(exc).__name__}: {exc}", EXIT_RUNTIME, scenario=cfg.scenario,
                       traceback=traceback.format_exc().splitlines()[-6:])
    print(json.dumps({"status": "ok", "scenario": cfg.scenario, "config_sha256": cfg.digest(),
                      "artifacts": {k: str(v) for k, v in written.items()}}, indent=1))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
