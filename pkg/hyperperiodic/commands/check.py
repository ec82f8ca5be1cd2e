import argparse
import logging

from hyperperiodic.commands.common import add_output_arguments, add_problem_argument
from hyperperiodic.exceptions import EXIT_OK, EXIT_VALIDATION
from hyperperiodic.services.problem_model import validate
from hyperperiodic.utils.io_utils import dump_report, emit_json, load_problem

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser(
        "check",
        help="evaluate the structural and sufficient conditions of a problem",
        description="Report every hypothesis on speeds, couplings and reflections. "
        "Sufficient conditions are informational; the exit status reflects the hard checks only.",
    )
    add_problem_argument(parser)
    add_output_arguments(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    report = validate(problem)
    emit_json(dump_report(report), args.output)
    logger.info(
        f"Condition check finished: valid={report.valid}",
        extra={"condunif": report.condunif_value, "warnings": len(report.warnings)},
    )
    return EXIT_OK if report.valid else EXIT_VALIDATION
