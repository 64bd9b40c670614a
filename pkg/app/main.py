"""Command-line entry point for the EHG preterm-birth pipeline.

This module builds the ``ehg`` argument parser, configures logging, loads the
pipeline configuration with the command-line overrides applied, and
dispatches to the selected verb. Exit codes: 0 on success, 1 on invalid
input or configuration, 2 on any other failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app import __version__
from app.commands import COMMANDS
from app.core.config import load_config
from app.core.exceptions import EhgValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="INI configuration file")
    common.add_argument("--seed", type=int, default=None, help="master seed (evaluation.master_seed)")
    common.add_argument("--out", type=Path, default=None, help="output directory (output.directory)")
    common.add_argument("--jobs", type=int, default=None, help="worker count, 0 = all cores")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Create the ``ehg`` parser with one subcommand per verb."""
    parser = argparse.ArgumentParser(
        prog="ehg",
        description="Preterm-birth prediction from electrohysterogram recordings.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_arguments()
    for name, command in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=command.HELP)
        command.add_arguments(sub)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Configure root logging for CLI runs."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI.

    Args:
        argv: Arguments without the program name; ``sys.argv[1:]`` when None.

    Returns:
    -------
        int: Process exit code.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    command = COMMANDS[args.command]
    overrides = {
        "evaluation": {"master_seed": args.seed},
        "output": {"directory": args.out, "jobs": args.jobs},
    }
    try:
        config = load_config(args.config, overrides, check_paths=command.NEEDS_DATASET)
        return command.run(args, config)
    except EhgValidationError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_VALIDATION
    except Exception as e:
        logger.exception(f"{args.command} failed: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
