"""Command-line interface.

Subcommands mirror the pipeline stages; ``run`` chains all of them.  Exit
codes: 0 on success, 2 for configuration problems, 3 when some estimator
records failed (the run itself still completed).
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    RunPlan,
    run_all,
    run_report,
    run_sample_dgps,
    run_simulate,
    run_summarize,
)


def _add_common(p: argparse.ArgumentParser, workers: bool = False, resume: bool = False):
    p.add_argument("--config", required=True, help="path to the JSON run plan")
    p.add_argument("--out", default=None,
                   help="output directory (default: the plan's output_dir)")
    if workers:
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes (default 1; results identical)")
    if resume:
        p.add_argument("--resume", action="store_true",
                       help="skip work already present in the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atebench",
        description="Monte-Carlo reliability benchmark for ATE estimators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("sample-dgps", help="sample processes to JSON"),
                resume=True)
    _add_common(sub.add_parser("simulate", help="simulate data and run estimators"),
                workers=True, resume=True)
    _add_common(sub.add_parser("summarize", help="reduce estimates to CSV tables"))
    _add_common(sub.add_parser("report", help="render reliability curves to SVG"))
    _add_common(sub.add_parser("run", help="all stages in order"),
                workers=True, resume=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        plan = RunPlan.load(args.config)
        out = args.out or plan.output_dir
        if out is None:
            raise ConfigError("no output directory: pass --out or set output_dir in the plan")
        if args.command == "sample-dgps":
            n_sampled, n_failed = run_sample_dgps(plan, out, resume=args.resume)
            print(f"processes: {n_sampled} sampled, {n_failed} infeasible")
            return 0
        if args.command == "simulate":
            n_ok, n_failed = run_simulate(plan, out, workers=args.workers,
                                          resume=args.resume)
            print(f"estimates: {n_ok} ok, {n_failed} failed")
            return 3 if n_failed else 0
        if args.command == "summarize":
            paths = run_summarize(plan, out)
            for name, path in paths.items():
                print(f"{name}: {path}")
            return 0
        if args.command == "report":
            for path in run_report(plan, out):
                print(path)
            return 0
        n_ok, n_failed = run_all(plan, out, workers=args.workers,
                                 resume=args.resume)
        print(f"estimates: {n_ok} ok, {n_failed} failed")
        return 3 if n_failed else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
