import argparse
import logging
from typing import List

import numpy as np

from hyperperiodic.commands.common import (
    add_forcing_argument,
    add_output_arguments,
    add_problem_argument,
    component_header,
    load_solver_forcing,
    sample_rows,
)
from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import EXIT_OK, ProblemValidationError
from hyperperiodic.schemas.problem import ProblemData
from hyperperiodic.schemas.reports import KernelDefect, ModeIterations, SolveSummary
from hyperperiodic.services.coupled import (
    coupled_solve_field,
    fredholm_solve,
    resonance_test,
    richardson_solve_field,
    split_coupling,
)
from hyperperiodic.services.diagonal import apply_Ainv
from hyperperiodic.services.fourier import FourierField, period_times, synthesize, w_norm
from hyperperiodic.services.problem_model import compute_phases
from hyperperiodic.services.verification import mode_residuals
from hyperperiodic.utils.io_utils import dump_report, emit_json, load_problem, write_csv

logger = logging.getLogger(__name__)

MODES = ("direct", "richardson", "fredholm")


def register(subparsers):
    parser = subparsers.add_parser(
        "solve",
        help="compute the time-periodic solution for a forcing",
        description="Solve mode by mode. 'direct' uses the closed form when the coupling is "
        "diagonal and matrix-exponential propagators otherwise; 'richardson' iterates on the "
        "off-diagonal coupling; 'fredholm' also handles resonant modes.",
    )
    add_problem_argument(parser)
    add_forcing_argument(parser)
    parser.add_argument("--gamma", type=float, default=1.0, help="Sobolev-type weight of the reported norms")
    parser.add_argument("--mode", choices=MODES, default="direct")
    parser.add_argument("--times", type=int, default=None, help="synthesis times per period for the CSV")
    add_output_arguments(parser, csv_help="write x,t,u_1..u_n rows here")
    parser.set_defaults(handler=run)


def is_decoupled(problem: ProblemData) -> bool:
    _, off_diagonal = split_coupling(problem)
    return not np.any(off_diagonal)


def unforced_resonant_modes(problem: ProblemData, forcing: FourierField) -> List[int]:
    test = resonance_test(problem, forcing.grid, "direct")
    return [s for s in range(forcing.S + 1) if not np.any(forcing.mode(s)) and test(s)]


def run(args: argparse.Namespace) -> int:
    if args.gamma < 0:
        raise ProblemValidationError(f"gamma must be nonnegative, got {args.gamma}")
    problem = load_problem(args.problem)
    forcing = load_solver_forcing(args.forcing, problem)
    logger.info(
        f"Solving with mode={args.mode}, S={forcing.S}, R={forcing.grid.subdivisions}",
        extra={"mode": args.mode, "gamma": args.gamma},
    )

    iterations: List[ModeIterations] = []
    defects: List[KernelDefect] = []
    resonant: List[int] = []
    zero_forced: List[int] = []
    if args.mode == "fredholm":
        solution, found = fredholm_solve(problem, forcing)
        defects = [
            KernelDefect(s=d.s, index=d.index, defect_re=d.value.real, defect_im=d.value.imag, abs_defect=abs(d.value))
            for d in found
        ]
        resonant = sorted({d.s for d in found})
    elif args.mode == "richardson":
        solution, results = richardson_solve_field(problem, forcing)
        iterations = [
            ModeIterations(s=s, iterations=result.iterations, ratio=result.ratio)
            for s, result in sorted(results.items())
        ]
        zero_forced = unforced_resonant_modes(split_coupling(problem)[0], forcing)
    else:
        if is_decoupled(problem):
            solution = apply_Ainv(problem, compute_phases(problem), forcing)
        else:
            solution = coupled_solve_field(problem, forcing)
        zero_forced = unforced_resonant_modes(problem, forcing)

    residuals = mode_residuals(problem, solution, forcing, "direct", args.gamma)
    summary = SolveSummary(
        mode=args.mode,
        gamma=args.gamma,
        truncation=forcing.S,
        subdivisions=forcing.grid.subdivisions,
        pde_residual=residuals.field_pde,
        boundary_residual=residuals.field_boundary,
        interface_jump=residuals.interface,
        w_norm_gamma=w_norm(solution, args.gamma),
        w_norm_gamma_minus_1=w_norm(solution, max(args.gamma - 1.0, 0.0)),
        forcing_w_norm_gamma=w_norm(forcing, args.gamma),
        iterations=iterations,
        defects=defects,
        resonant_modes=resonant,
        zero_forced_resonant=zero_forced,
    )

    if args.csv:
        count = get_settings().SYNTHESIS_TIMES if args.times is None else args.times
        times = period_times(count)
        grid = solution.grid
        samples = grid.collapse(synthesize(solution, times))
        write_csv(args.csv, component_header(["x", "t"], problem.n), sample_rows(grid.global_x, times, samples))

    emit_json(dump_report(summary), args.output)
    return EXIT_OK
