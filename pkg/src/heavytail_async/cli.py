#!/usr/bin/env python3

import argparse
from pathlib import Path

from .acceptance import CRITERIA, format_report, run_acceptance
from .config import config
from .exceptions import HeavyTailError
from .experiment import load_config
from .metrics import summary_line, write_run
from .simulation import run_simulation
from .sweep import load_sweep, run_sweep
from .utils.logger import logger


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heavytail-async",
        description="Simulate asynchronous clipped optimisation under heavy-tailed noise",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("-o", "--out", type=str, help="Output directory (default: $HTA_OUT_DIR or ./runs)")
    shared.add_argument("--seed", type=int, help="Master seed, overrides the config file")
    shared.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config field, dotted keys for nested sections (repeatable)",
    )

    run = commands.add_parser("run", parents=[shared], help="Run a single experiment")
    run.add_argument("-c", "--config", type=str, help="JSON run config (defaults are used when omitted)")
    run.set_defaults(func=cmd_run)

    sweep = commands.add_parser("sweep", parents=[shared], help="Run a hyperparameter grid")
    sweep.add_argument("-c", "--config", type=str, required=True, help="JSON sweep file")
    sweep.add_argument("-p", "--parallel", type=int, help="Number of points run at the same time")
    sweep.set_defaults(func=cmd_sweep)

    accept = commands.add_parser("accept", help="Run the acceptance suite")
    accept.add_argument("--only", nargs="+", choices=list(CRITERIA), help="Subset of criteria to run")
    accept.set_defaults(func=cmd_accept)
    return parser


def _changes(args) -> dict:
    return {"seed": args.seed} if args.seed is not None else {}


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, args.set, **_changes(args))
    except (HeavyTailError, ValueError, OSError) as e:
        logger.error(f"Invalid run config: {e}")
        return 1

    try:
        result = run_simulation(cfg)
        csv_path, json_path = write_run(result, args.out)
    except (HeavyTailError, ValueError, OSError) as e:
        logger.error(f"Run '{cfg.name}' failed", exception=e)
        return 1

    logger.success(f"Run '{cfg.name}' written to {csv_path.parent}")
    print(summary_line(result))
    return 0


def cmd_sweep(args) -> int:
    try:
        spec = load_sweep(args.config, args.set, **_changes(args))
        parallel = config.parallel if args.parallel is None else args.parallel
        if parallel < 1:
            raise ValueError("--parallel must be at least 1")
        out = Path(args.out) if args.out else None
        report = run_sweep(spec, out_dir=out, parallel=parallel)
    except (HeavyTailError, ValueError, OSError) as e:
        logger.error(f"Sweep failed: {e}")
        return 1

    if report.n_failed:
        logger.warning(f"{report.n_failed}/{spec.size} points failed, see {logger.sweep_log}")
    best = report.best
    if best is None or best["min_grad_norm_sq"] is None:
        logger.warning("No sweep point completed")
    else:
        logger.success(f"Best point {best['params']} ({', '.join(best['points'])})")
        print(
            f"best={best['points'][0]} min_gns={best['min_grad_norm_sq']} "
            f"points={spec.size} index={report.out_dir}"
        )
    return 0


def cmd_accept(args) -> int:
    results = run_acceptance(args.only)
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    exit(main())
