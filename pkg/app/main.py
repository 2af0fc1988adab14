"""Command-line entry point for the multitemporal unmixing toolkit."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app import __version__
from app.config import settings
from app.errors import ConfigError, DatasetError, NumericalError, UnmixingError

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser, desk_scale: bool = True) -> None:
    parser.add_argument("--config", type=Path, help="JSON experiment config")
    parser.add_argument("--out", type=Path, help="Output directory")
    parser.add_argument("--seed", type=int, help="Override every seed in the config")
    if desk_scale:
        parser.add_argument(
            "--desk-scale",
            action="store_true",
            help="Reduced defaults (Scenario B L=50, 5000 epochs) for fields the config leaves unset",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app.main",
        description="Multitemporal hyperspectral unmixing: simulation, assimilation and learned dynamics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Generate a synthetic dataset")
    _add_common(simulate)
    simulate.add_argument("--scenario", choices=["A", "B"], help="Override the config's scenario")

    assimilate = commands.add_parser("assimilate", help="Variational assimilation on a Scenario A dataset")
    _add_common(assimilate, desk_scale=False)
    assimilate.add_argument("--dataset", type=Path, required=True, help="Dataset directory")

    learn = commands.add_parser("learn", help="Train dynamics networks on a Scenario B dataset")
    _add_common(learn)
    learn.add_argument("--dataset", type=Path, required=True, help="Dataset directory")

    evaluate = commands.add_parser("evaluate", help="Merge metric tables of result directories")
    evaluate.add_argument("results", type=Path, nargs="+", help="Result directories")
    evaluate.add_argument("--out", type=Path, help="Output directory")
    return parser


def run(args: argparse.Namespace) -> None:
    # torch loads with the command modules
    from app.experiments import (
        cmd_assimilate,
        cmd_evaluate,
        cmd_learn,
        cmd_simulate,
        load_experiment_config,
    )

    if args.command == "evaluate":
        cmd_evaluate(args.results, args.out or Path(settings.output_dir) / "evaluate")
        return

    overrides = {"scenario": args.scenario} if getattr(args, "scenario", None) else None
    config = load_experiment_config(
        args.config,
        seed=args.seed,
        desk_scale=getattr(args, "desk_scale", False),
        overrides=overrides,
    )
    out = args.out or Path(config.output_dir or settings.output_dir) / args.command
    if args.command == "simulate":
        cmd_simulate(config, out)
    elif args.command == "assimilate":
        cmd_assimilate(config, args.dataset, out)
    elif args.command == "learn":
        cmd_learn(config, args.dataset, out)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and map failures to exit codes."""
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    args = build_parser().parse_args(argv)
    logger.info(f"Running {args.command}")
    try:
        run(args)
    except ValidationError as e:
        print(f"Invalid configuration:\n{e}", file=sys.stderr)
        return ConfigError.exit_code
    except UnmixingError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return DatasetError.exit_code
    except (ValueError, RuntimeError) as e:
        # Domain validation surfacing at the command level
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return ConfigError.exit_code if isinstance(e, ValueError) else NumericalError.exit_code
    logger.info(f"{args.command} complete")
    return 0


if __name__ == "__main__":
    sys.exit(main())
