"""Command line entry point.

    stochgates run <config> [--preset NAME] [--seed S] [--out DIR] [--jobs J]
    stochgates run --preset xor --reps 3
    stochgates summarize <runs.csv> [--by method,grid_value] [--out FILE]
    stochgates datagen <preset> --out data.csv [--seed S]

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
The only environment override is STOCHGATES_OUT (output directory).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import datagen, experiments
from .config import load_config
from .errors import ConfigError, StgError
from .ndcore import Rng, derive_seed

OUT_ENV = "STOCHGATES_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="stochgates", description="Stochastic-gate feature selection experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run an experiment sweep")
    r.add_argument("config", nargs="?", help="config file (omit when using --preset)")
    r.add_argument("--preset", choices=sorted(experiments.PRESETS))
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--reps", type=int, help="override repetitions")
    r.add_argument("--no-traces", action="store_true")

    s = sub.add_parser("summarize", help="summarize an existing runs.csv")
    s.add_argument("runs")
    s.add_argument("--by", default="method,grid_value")
    s.add_argument("--out", help="write summary CSV here instead of stdout")

    d = sub.add_parser("datagen", help="write a synthetic dataset as CSV")
    d.add_argument("preset", choices=sorted(set(experiments.PRESETS) - {"mi_oracle"}))
    d.add_argument("--out", required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--n", type=int)
    return p


def _resolve(args):
    if args.config and args.preset:
        raise ConfigError("give a config file or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = experiments.preset(args.preset)
    else:
        raise ConfigError("run needs a config file or --preset")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.reps is not None:
        cfg.repetitions = args.reps
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    cfg.output = args.out or os.environ.get(OUT_ENV) or cfg.output
    return cfg.validate()


def _cmd_run(args):
    cfg = _resolve(args)
    reports = experiments.run_experiment(cfg, jobs=args.jobs)
    summaries = experiments.summarize(reports)
    paths = experiments.emit(reports, summaries, cfg.output, cfg, traces=not args.no_traces)
    failed = sum(r.status != "ok" for r in reports)
    total = sum(r.runtime for r in reports)
    print(f"{len(reports)} runs ({failed} failed) in {total:.1f}s -> {paths['runs'].parent}")
    sys.stdout.write(experiments.summary_csv(summaries))
    return EXIT_OK


def _cmd_summarize(args):
    rows = experiments.read_runs(args.runs)
    if not rows:
        raise ConfigError(f"{args.runs} has no rows")
    by = tuple(c.strip() for c in args.by.split(",") if c.strip())
    missing = [c for c in by if c not in rows[0]]
    if missing:
        raise ConfigError(f"unknown group columns {missing}")
    text = experiments.summary_csv(experiments.summarize(rows, by))
    if args.out:
        experiments._write_atomic(__import__("pathlib").Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_datagen(args):
    cfg = experiments.preset(args.preset)
    if args.n is not None:
        cfg.data["n"] = args.n
    grid_value = cfg.grid_values[0]
    if cfg.grid_param == "n":
        grid_value = args.n or 100
    ds, _ = experiments.make_dataset(cfg, grid_value, Rng(derive_seed(args.seed, "data", 0, 0)))
    datagen.write_csv(ds, args.out)
    print(f"wrote {ds.n_samples} x {ds.n_features} {ds.task} rows to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "summarize": _cmd_summarize, "datagen": _cmd_datagen}[args.cmd]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StgError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
