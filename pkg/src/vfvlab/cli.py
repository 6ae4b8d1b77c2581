"""Command-line entry point.

Subcommands: run, hierarchy, concat, consistency, report.  Exit codes:
0 success, 2 positivity failure, 3 config error, 4 experiment precondition
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import ExperimentPreconditionError, InvalidStateError
from .experiments import RunConfig, cmd_concat, cmd_consistency, cmd_hierarchy, cmd_report, cmd_run, load_config

EXIT_OK = 0
EXIT_POSITIVITY = 2
EXIT_CONFIG = 3
EXIT_PRECONDITION = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfvlab",
                                     description="viscous finite-volume Euler laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "single-mesh simulation with snapshot output"),
        ("hierarchy", "mesh-hierarchy defect pipeline (defects.csv)"),
        ("concat", "entropy-bump concatenation experiment at --tau"),
        ("consistency", "weak-form consistency residual study"),
        ("report", "summarize a finished run directory"),
    ):
        p = sub.add_parser(name, help=help_text)
        if name == "report":
            p.add_argument("--out", type=Path, required=True, help="run directory to summarize")
            continue
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--meshes", help="comma-separated mesh sizes, e.g. 16,32,64")
        p.add_argument("--seed", type=int, help="KH coefficient seed")
        p.add_argument("--t-end", type=float, dest="t_end", help="final time")
        p.add_argument("--paper-scale", action="store_true",
                       help="use the 64..1024 mesh hierarchy (multi-hour runtime)")
        p.add_argument("--tau", type=float, help="concatenation restart time")
        p.add_argument("--pressure-work-form", choices=("averaged", "as_printed"),
                       help="energy-flux pressure work variant")
    return parser


def config_from_args(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    updates = {}
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.meshes is not None:
        updates["meshes"] = tuple(int(v) for v in args.meshes.split(","))
    if args.t_end is not None:
        updates["t_end"] = args.t_end
    if args.paper_scale:
        updates["paper_scale"] = True
    if args.tau is not None:
        updates["tau"] = args.tau
    if updates:
        config = dataclasses.replace(config, **updates)
    if args.seed is not None:
        config = dataclasses.replace(config, kh=dataclasses.replace(config.kh, seed=args.seed))
    if args.pressure_work_form is not None:
        config = dataclasses.replace(
            config, scheme=dataclasses.replace(config.scheme,
                                               pressure_work_form=args.pressure_work_form))
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        cmd_report(args.out)
        return EXIT_OK
    try:
        config = config_from_args(args)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "run":
            result = cmd_run(config)
            print(f"run complete: {len(result.snapshots)} snapshots in {result.out_dir} "
                  f"(max drift {result.audit['max_relative_drift']:.3e})")
        elif args.command == "hierarchy":
            result = cmd_hierarchy(config)
            last = result.rows[-1]
            print(f"hierarchy complete: D_E({last.t:g})={last.d_e:.4g} "
                  f"D_Ent({last.t:g})={last.d_ent:.4g} -> {config.out_dir}")
        elif args.command == "concat":
            result = cmd_concat(config)
            v = result.verdict
            print(f"concat verdict: {v.verdict} (baseline rate {v.rate_a:.4g}, "
                  f"bumped rate {v.rate_b:.4g})")
        elif args.command == "consistency":
            study = cmd_consistency(config)
            bad = [k for k, v in study.decay.items()
                   if not (v["e2_decreasing"] and v["e3_decreasing"])]
            print("consistency decay: " + ("all monotone" if not bad else f"violations {bad}"))
        return EXIT_OK
    except (InvalidStateError,) as exc:
        print(f"positivity failure: {exc}", file=sys.stderr)
        return EXIT_POSITIVITY
    except ExperimentPreconditionError as exc:
        print(f"experiment precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
