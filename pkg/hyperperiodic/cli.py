"""Command-line entry point: `hyperperiodic <command> ...`."""
from typing import Optional, Sequence
import argparse
import logging
import sys

from hyperperiodic import __version__
from hyperperiodic.commands import check, kernel, oracle, scan, solve, verify
from hyperperiodic.config import get_settings
from hyperperiodic.utils.response_handler import handle_command_error

logger = logging.getLogger(__name__)

COMMANDS = (check, scan, solve, kernel, oracle, verify)


def configure_logging(level: Optional[str] = None):
    """Log to stderr; stdout carries the JSON reports."""
    logging.basicConfig(
        level=level or get_settings().LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperperiodic",
        description="Time-periodic solutions of linear first-order hyperbolic systems "
        "with reflection boundary conditions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        choices=("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"),
        default=None,
        help="override HYPERPERIODIC_LOG_LEVEL",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    logger.info(f"Running {args.command}")
    try:
        return args.handler(args)
    except Exception as exc:
        return handle_command_error(exc, args.command)


if __name__ == "__main__":
    sys.exit(main())
