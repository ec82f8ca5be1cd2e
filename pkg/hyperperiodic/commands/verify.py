import argparse
import logging
import math
from typing import List

import numpy as np

from hyperperiodic.commands.common import (
    add_forcing_argument,
    add_output_arguments,
    add_problem_argument,
    load_solver_forcing,
)
from hyperperiodic.exceptions import EXIT_OK, ProblemValidationError
from hyperperiodic.schemas.reports import SensitivityCheck, VerificationReport
from hyperperiodic.services.coupled import coupled_solve_field, is_formal_adjoint
from hyperperiodic.services.fourier import w_norm
from hyperperiodic.services.verification import (
    duality_check,
    finite_difference_a,
    finite_difference_b,
    inner_product,
    mode_residuals,
    sensitivity_a,
    sensitivity_b,
    sensitivity_mismatch,
)
from hyperperiodic.utils.io_utils import dump_report, emit_json, load_problem

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser(
        "verify",
        help="residuals, the duality identity and sensitivity checks for one forcing",
        description="Solve the direct and adjoint problems for the forcing, check both residuals, "
        "the duality identity (constant speeds only) and the b- and a-derivatives against "
        "central finite differences.",
    )
    add_problem_argument(parser)
    add_forcing_argument(parser)
    parser.add_argument("--gamma", type=float, default=2.0, help="weight of the base norm")
    parser.add_argument("--step", type=float, default=1e-5, help="finite-difference step")
    add_output_arguments(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.gamma < 0:
        raise ProblemValidationError(f"gamma must be nonnegative, got {args.gamma}")
    problem = load_problem(args.problem)
    forcing = load_solver_forcing(args.forcing, problem)

    solution = coupled_solve_field(problem, forcing)
    adjoint = coupled_solve_field(problem, forcing, "adjoint")
    direct_residuals = mode_residuals(problem, solution, forcing, "direct", args.gamma)
    adjoint_residuals = mode_residuals(problem, adjoint, forcing, "adjoint", args.gamma)

    duality = None
    duality_scale = None
    if not is_formal_adjoint(problem):
        duality = duality_check(problem, solution, adjoint, forcing, forcing)
        duality_scale = math.sqrt(inner_product(solution, solution) * inner_product(adjoint, adjoint))
    else:
        logger.info("Skipping the duality identity: speeds are not constant on [0,1]")

    sensitivities: List[SensitivityCheck] = []
    b_direction = np.ones_like(problem.b_values)
    a_direction = problem.a_values.copy()
    for label, analytic, reference, weight in (
        ("b", sensitivity_b(problem, forcing, b_direction),
         finite_difference_b(problem, forcing, b_direction, args.step), args.gamma - 1.0),
        ("a", sensitivity_a(problem, forcing, a_direction),
         finite_difference_a(problem, forcing, a_direction, args.step), args.gamma - 2.0),
    ):
        weight = max(weight, 0.0)
        difference, relative = sensitivity_mismatch(analytic, reference, weight)
        sensitivities.append(SensitivityCheck(
            direction=label,
            norm_gamma=weight,
            analytic_norm=w_norm(analytic, weight),
            difference=difference,
            relative_difference=relative,
        ))
        logger.debug("Sensitivity in %s: relative difference %.3e", label, relative)

    report = VerificationReport(
        gamma=args.gamma,
        pde_residual=direct_residuals.field_pde,
        boundary_residual=direct_residuals.field_boundary,
        adjoint_pde_residual=adjoint_residuals.field_pde,
        adjoint_boundary_residual=adjoint_residuals.field_boundary,
        interface_jump=max(direct_residuals.interface, adjoint_residuals.interface),
        adjoint_formal=is_formal_adjoint(problem),
        duality_defect=duality,
        duality_scale=duality_scale,
        sensitivities=sensitivities,
    )
    emit_json(dump_report(report), args.output)
    return EXIT_OK
