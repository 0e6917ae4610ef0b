"""Command-line front end.

Subcommands::

    fluxlab run --config cfg.ini [--jobs N] [--out DIR] ...
    fluxlab compute {flux|calabi|swept-area} [options]
    fluxlab verify {cocycle|transgression|flows} [options]
    fluxlab demo cell-division [--target 0.2]
    fluxlab list surfaces

Reports stream to stdout as line-delimited JSON records (or a table with
``--format table``); with ``--out DIR`` the records are also written to
``DIR/report.jsonl`` with one figure per experiment rendered alongside.
The exit code is 0 exactly when every check passes.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import ConfigError, ExperimentSpec, RunSettings, load_config
from .experiments import RUNNERS, run_experiment
from .report import Row, all_passed, rows_to_records, rows_to_table, save_figure

__all__ = ["main", "build_parser"]


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="experiment config file (INI sections)")
    common.add_argument("--jobs", type=int, help="concurrent experiments")
    common.add_argument("--tol", type=float, help="override the default tolerance")
    common.add_argument("--seed", type=int, help="seed for generated test data")
    common.add_argument("--format", choices=("records", "table"),
                        help="report stream format (default records)")
    common.add_argument("--out", help="directory for report.jsonl and figures")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="fluxlab",
        parents=[common],
        description="Invariants of area-preserving dynamics on compact "
                    "surfaces with boundary: computation and verification.",
    )
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("run", parents=[common],
                   help="run the experiments listed in --config")

    comp = sub.add_parser("compute", parents=[common], help="compute one invariant")
    comp.add_argument("quantity", choices=("flux", "calabi", "swept-area"))
    comp.add_argument("--surface", default="mobius", choices=("disk", "annulus", "mobius"))
    comp.add_argument("--map", default="shear:t=1",
                      help="map spec, e.g. shear:t=1 (flux on the Mobius band)")
    comp.add_argument("--lam", "--lambda", dest="lam", default="dx",
                      help="closed pairing 1-form (dx, or 'P,Q' expressions)")
    comp.add_argument("--t", default=None, help="comma-separated time parameters")

    ver = sub.add_parser("verify", parents=[common], help="run a verification suite")
    ver.add_argument("suite", choices=("cocycle", "transgression", "flows"))
    ver.add_argument("--pairs", type=int, default=None, help="number of generated pairs")
    ver.add_argument("--triples", type=int, default=None, help="number of generated triples")

    demo = sub.add_parser("demo", parents=[common], help="run a demonstration pipeline")
    demo.add_argument("what", choices=("cell-division",))
    demo.add_argument("--target", type=float, default=0.2,
                      help="local invariant of the prepared input")

    sub.add_parser("list", parents=[common], help="list supported surfaces").add_argument(
        "what", choices=("surfaces",))
    return parser


def _experiments_from_args(args) -> tuple[RunSettings, list[ExperimentSpec]]:
    if args.config:
        cfg = load_config(args.config)
        settings, experiments = cfg.settings, cfg.experiments
    else:
        settings, experiments = RunSettings(), []

    if args.command == "run":
        if not experiments:
            raise ConfigError("run needs a --config file with [experiment ...] sections")
    elif args.command == "compute":
        params = {"_name": args.quantity}
        if args.quantity == "flux":
            map_spec = args.map
            if not map_spec.startswith("shear"):
                raise ConfigError("compute flux supports the shear family (shear:t=...)")
            if ":" in map_spec:
                for kv in map_spec.split(":", 1)[1].split(","):
                    k, _, v = kv.partition("=")
                    if k.strip() != "t":
                        raise ConfigError(f"unknown map parameter {k!r}")
                    params["t"] = v
            if args.t:
                params["t"] = args.t
            if args.lam != "dx":
                raise ConfigError("the closed-form flux oracle is stated for lambda = dx")
        experiments = [ExperimentSpec(args.quantity, args.quantity, params)]
    elif args.command == "verify":
        params = {"_name": args.suite}
        if args.pairs:
            params["pairs"] = args.pairs
        if args.triples:
            params["triples"] = args.triples
        experiments = [ExperimentSpec(args.suite, args.suite, params)]
    elif args.command == "demo":
        experiments = [ExperimentSpec(args.what, args.what, {"_name": args.what,
                                                             "target": args.target})]
    if args.tol:
        settings.tol = args.tol
    if args.seed is not None:
        settings.seed = args.seed
    return settings, experiments


def _run_all(settings: RunSettings, experiments: list[ExperimentSpec], jobs: int) -> list[list[Row]]:
    def one(exp: ExperimentSpec) -> list[Row]:
        params = dict(exp.params)
        params.setdefault("_name", exp.name)
        return run_experiment(exp.type, settings, params)

    if jobs <= 1 or len(experiments) <= 1:
        return [one(e) for e in experiments]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, experiments))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for flag, default in (("config", None), ("jobs", 1), ("tol", None),
                          ("seed", None), ("format", "records"), ("out", None)):
        if not hasattr(args, flag):
            setattr(args, flag, default)
    if args.command is None:
        parser.print_help()
        return 2
    if args.command == "list":
        print("disk     unit disk, area pi; trivial first cohomology, no cut arcs")
        print("annulus  strip quotient [0,1]x[-w,w], seam (x,y) -> (x+1, y)")
        print("mobius   strip quotient [0,1]x[-w,w], seam (x,y) -> (x+1, -y)")
        return 0

    try:
        settings, experiments = _experiments_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        groups = _run_all(settings, experiments, args.jobs)
    except Exception as exc:  # surface per-run failures without a traceback wall
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    rows = [r for group in groups for r in group]
    if args.format == "table":
        print(rows_to_table(rows))
    else:
        print(rows_to_records(rows))

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.jsonl"), "w") as fh:
            fh.write(rows_to_records(rows) + "\n")
        for exp, group in zip(experiments, groups):
            if group:
                fig = os.path.join(args.out, f"fig_{exp.name.replace(' ', '_')}.png")
                save_figure(group, fig, title=exp.name)
        print(f"report and figures written to {args.out}", file=sys.stderr)

    for group in groups:
        for r in group:
            if not r.passed:
                print(f"FAILED: {r.experiment}: {r.check} "
                      f"(error {r.error:.3e} > tol {r.tolerance:.0e})", file=sys.stderr)
    return 0 if all_passed(rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
