import argparse
import logging

from hyperperiodic.commands.common import add_output_arguments, add_problem_argument
from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import EXIT_OK
from hyperperiodic.schemas.reports import KernelModeReport, KernelReport
from hyperperiodic.services.coupled import KernelBasis, kernel_basis
from hyperperiodic.utils.io_utils import dump_report, emit_json, load_problem, write_csv

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser(
        "kernel",
        help="null spaces of the mode problems for |s| <= smax",
        description="Compute kernel profiles of the direct problem or of its adjoint.",
    )
    add_problem_argument(parser)
    parser.add_argument("--smax", type=int, default=None, help="largest |s| examined (default from settings)")
    parser.add_argument("--side", choices=("direct", "adjoint"), default="direct")
    add_output_arguments(parser, csv_help="write s,index,x,re_1,im_1,... rows of every kernel profile here")
    parser.set_defaults(handler=run)


def kernel_rows(basis: KernelBasis):
    grid = basis.grid
    x = grid.global_x
    for s, entry in basis.entries.items():
        for index in range(entry.dimension):
            values = grid.collapse(entry.profiles[index])
            for i, position in enumerate(x):
                row = [s, index, float(position)]
                for component in values[:, i]:
                    row.extend([float(component.real), float(component.imag)])
                yield row


def run(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    s_max = get_settings().DEFAULT_SMAX if args.smax is None else args.smax
    basis = kernel_basis(problem, s_max, args.side)
    report = KernelReport(
        side=args.side,
        s_max=s_max,
        formal=basis.formal,
        modes=[
            KernelModeReport(
                s=s, dimension=entry.dimension,
                sigma=[float(v) for v in entry.sigma], residual=entry.residual,
            )
            for s, entry in basis.entries.items()
        ],
        total_dimension=basis.total_dimension,
        resonant_modes=basis.resonant_modes,
    )
    logger.info(
        f"Kernel scan on the {args.side} side: total dimension {basis.total_dimension}",
        extra={"resonant_modes": basis.resonant_modes},
    )
    if args.csv:
        header = ["s", "index", "x"]
        for j in range(1, problem.n + 1):
            header.extend([f"re_{j}", f"im_{j}"])
        write_csv(args.csv, header, kernel_rows(basis))
    emit_json(dump_report(report), args.output)
    return EXIT_OK
