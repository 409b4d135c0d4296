"""
Command-line entry point.

    twr-beamform run --preset fig2a --trials 200 --seed 7 --out results.csv
    twr-beamform run --config my.cfg --set ns=2 --set methods=anomax,err
    twr-beamform presets

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from twr_beamform.config import settings
from twr_beamform.evaluation.presets import DESCRIPTIONS, PRESETS, preset_values
from twr_beamform.evaluation.sweep import emit_csv, parse_config, parse_overrides, run_sweep
from twr_beamform.utils.errors import ConfigError
from twr_beamform.utils.logging_config import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twr-beamform",
        description="Two-way relay beamforming Monte Carlo sweeps",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"Workers default to TWR_THREADS or the CPU count ({settings.runtime.workers}).",
    )
    subparsers = parser.add_subparsers(dest="command")

    cmd_run = subparsers.add_parser("run", help="Run a sweep and write CSV results")
    cmd_run.add_argument("--preset", choices=sorted(PRESETS), help="Scenario preset")
    cmd_run.add_argument("--config", type=Path, help="Flat key=value config file")
    cmd_run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                         help="Override a config value (repeatable)")
    cmd_run.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    cmd_run.add_argument("--seed", type=int, help="Base seed; trial i uses seed + i")
    cmd_run.add_argument("--full", action="store_true", help="Preset at full scale (M_rs=64)")
    cmd_run.add_argument("--workers", type=int, help="Worker processes (overrides TWR_THREADS)")
    cmd_run.add_argument("--out", type=Path, default=None, help="Output CSV path")

    subparsers.add_parser("presets", help="List scenario presets")
    return parser


def cmd_presets(args: argparse.Namespace) -> int:
    for name in sorted(PRESETS):
        print(f"{name:<8} {DESCRIPTIONS.get(name, '')}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    try:
        base = preset_values(args.preset, full=args.full) if args.preset else {}
        overrides = parse_overrides(args.overrides)
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        config = parse_config(args.config, overrides=overrides, base=base)
        if args.workers is not None and args.workers < 1:
            raise ConfigError(f"--workers must be positive, got {args.workers}", ["workers"])
    except ConfigError as e:
        logger.error(f"Configuration error ({', '.join(e.fields) or 'config'}): {e}")
        return EXIT_CONFIG

    out = args.out or settings.results_dir / f"{args.preset or 'sweep'}.csv"
    try:
        results = run_sweep(config, workers=args.workers)
        emit_csv(results, out)
        logger.info(f"Sweep finished: {results.to_dict()}")
    except Exception as e:
        logger.exception(f"Sweep failed: {e}")
        return EXIT_RUNTIME
    print(out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    command_map = {
        "run": cmd_run,
        "presets": cmd_presets,
    }
    return command_map[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
