import argparse

from hyperperiodic.commands.common import add_output_arguments, add_problem_argument
from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import EXIT_OK
from hyperperiodic.services.scanner import scan
from hyperperiodic.utils.io_utils import dump_report, emit_json, load_problem, write_csv


def register(subparsers):
    parser = subparsers.add_parser(
        "scan",
        help="sweep |det(I - R_s)| over |s| <= smax",
        description="Scan the small denominators of the decoupled problem and classify them.",
    )
    add_problem_argument(parser)
    parser.add_argument("--smax", type=int, default=None, help="largest |s| scanned (default from settings)")
    add_output_arguments(parser, csv_help="write s,abs_det,frob rows here")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    s_max = get_settings().DEFAULT_SMAX if args.smax is None else args.smax
    report = scan(problem, s_max)
    if args.csv:
        write_csv(args.csv, ["s", "abs_det", "frob"], ([m.s, m.abs_det, m.frob] for m in report.modes))
    emit_json(dump_report(report), args.output)
    return EXIT_OK
