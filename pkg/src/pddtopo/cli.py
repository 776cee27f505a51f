"""Command line front end: ``pddtopo run|sweep <config>`` and ``pddtopo reference <name>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import benchmarks, runner


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pddtopo", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for verb, help_ in (("run", "build surrogates once and run every requested analysis"),
                        ("sweep", "run every (S, m) cell of the config's sweep grid")):
        sp = sub.add_parser(verb, help=help_)
        sp.add_argument("config", type=Path, help="YAML problem config")
        sp.add_argument("-o", "--output", type=Path, help="output directory (overrides output.dir)")
        sp.add_argument("--workers", type=int, help="sampling threads (results do not depend on it)")
    rp = sub.add_parser("reference", help="print closed-form reference values of a benchmark")
    rp.add_argument("name", choices=sorted(benchmarks.ORACLES))
    rp.add_argument("--K", type=int, default=25, help="harmonics for disk_trig")
    rp.add_argument("--nu", type=float, default=0.2, help="Poisson's ratio for disk_uniform")
    return p


def _load(args) -> runner.ProblemConfig:
    cfg = runner.ProblemConfig.load(args.config)
    changes = {}
    if args.output is not None:
        changes["output_dir"] = str(args.output)
    if args.workers is not None:
        changes["workers"] = args.workers
    if changes:
        cfg = runner.ProblemConfig(**{**cfg.__dict__, **changes})
        cfg.validate()
    if cfg.output_dir is None:
        cfg = runner.ProblemConfig(**{**cfg.__dict__, "output_dir": "."})
    return cfg


def _summary(report: runner.RunReport) -> dict:
    return {"S": report.S, "m": report.m, "n_evaluations": report.n_evaluations,
            "moments": {r["quantity"]: r["value"] for r in report.moments},
            "sensitivities": {r["quantity"]: r["value"] for r in report.sensitivities},
            "reliability": [{k: r[k] for k in ("threshold", "direction", "pf", "dt_pf")} for r in report.reliability]}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "reference":
            params = {"K": args.K} if args.name == "disk_trig" else {"nu": args.nu}
            out = runner.reference_table(args.name, **params)
        elif args.command == "run":
            cfg = _load(args)
            report = runner.run(cfg)
            out = {"output_dir": cfg.output_dir, "config_hash": report.config_hash, "seed": report.seed,
                   **_summary(report)}
        else:
            cfg = _load(args)
            reports = runner.sweep(cfg)
            out = {"output_dir": cfg.output_dir, "config_hash": cfg.hash(), "seed": cfg.seed,
                   "cells": [_summary(r) for r in reports]}
    except runner.ConfigError as exc:
        json.dump({"error": "config", "field": exc.field, "message": exc.message}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - report any failure as machine-readable JSON
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
