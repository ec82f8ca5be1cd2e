import argparse
import logging

from hyperperiodic.commands.common import (
    add_forcing_argument,
    add_output_arguments,
    add_problem_argument,
    component_header,
    sample_rows,
)
from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import EXIT_OK
from hyperperiodic.schemas.reports import OracleSummary
from hyperperiodic.services.characteristics import oracle_grid, period_l2, run_to_periodic
from hyperperiodic.services.coupled import coupled_solve_field
from hyperperiodic.services.fourier import build_forcing, synthesize
from hyperperiodic.utils.io_utils import dump_report, emit_json, load_forcing_document, load_problem, write_csv

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser(
        "oracle",
        help="compare the spectral solution with upwind time stepping",
        description="Step the initial-boundary value problem until it is periodic and measure "
        "the L2 distance of its last period from the spectral solution on the same nodes.",
    )
    add_problem_argument(parser)
    add_forcing_argument(parser)
    parser.add_argument("--periods", type=int, default=None, help="forcing periods to integrate")
    parser.add_argument("--cfl", type=float, default=None, help="Courant number in (0, 1]")
    parser.add_argument("--cells", type=int, default=None, help="minimum number of x-cells")
    parser.add_argument("--samples", type=int, default=None, help="samples per period")
    add_output_arguments(parser, csv_help="write x,t,u_1..u_n rows of the last stepped period here")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    settings = get_settings()
    problem = load_problem(args.problem)
    forcing = build_forcing(load_forcing_document(args.forcing), problem)
    cells = settings.ORACLE_CELLS if args.cells is None else args.cells
    forcing = oracle_grid(forcing, cells)

    periods = settings.ORACLE_PERIODS if args.periods is None else args.periods
    cfl = settings.ORACLE_CFL if args.cfl is None else args.cfl
    stepped = run_to_periodic(problem, forcing, periods, args.samples, cfl)
    spectral = coupled_solve_field(problem, forcing)
    grid = forcing.grid
    reference = grid.collapse(synthesize(spectral, stepped.times))

    x = grid.global_x
    mismatch = period_l2(x, stepped.samples - reference)
    scale = period_l2(x, reference)
    summary = OracleSummary(
        cells=grid.cells * grid.subdivisions,
        periods=periods,
        cfl=cfl,
        dt=stepped.dt,
        steps_per_period=stepped.steps_per_period,
        deviation_history=stepped.deviation_history,
        final_deviation=stepped.final_deviation,
        spectral_norm=scale,
        l2_mismatch=mismatch,
        relative_mismatch=mismatch / scale if scale > 0 else mismatch,
    )
    logger.info(
        f"Oracle mismatch {summary.relative_mismatch:.3e} relative",
        extra={"l2_mismatch": mismatch, "final_deviation": summary.final_deviation},
    )
    if args.csv:
        write_csv(args.csv, component_header(["x", "t"], problem.n), sample_rows(x, stepped.times, stepped.samples))
    emit_json(dump_report(summary), args.output)
    return EXIT_OK
