"""Arguments and field helpers shared by the subcommands."""
import argparse
from typing import Iterator, List, Optional, Sequence

import numpy as np

from hyperperiodic.schemas.problem import ProblemData
from hyperperiodic.services.fourier import FourierField, build_forcing, fit_grid, subdivisions_for
from hyperperiodic.utils.io_utils import load_forcing_document


def add_problem_argument(parser: argparse.ArgumentParser):
    parser.add_argument("problem", help="problem file (JSON, schema hyperperiodic.problem/1)")


def add_forcing_argument(parser: argparse.ArgumentParser):
    parser.add_argument("forcing", help="forcing file (JSON, schema hyperperiodic.forcing/1)")


def add_output_arguments(parser: argparse.ArgumentParser, csv_help: Optional[str] = None):
    parser.add_argument("-o", "--output", default=None, help="write the JSON report here instead of stdout")
    if csv_help is not None:
        parser.add_argument("--csv", default=None, help=csv_help)


def load_solver_forcing(path: str, problem: ProblemData) -> FourierField:
    """Forcing refined onto a grid fine enough for every mode it carries."""
    forcing = build_forcing(load_forcing_document(path), problem)
    return fit_grid(forcing, subdivisions_for(problem, forcing.S))


def component_header(prefix: Sequence[str], n: int) -> List[str]:
    return list(prefix) + [f"u_{j}" for j in range(1, n + 1)]


def sample_rows(x: np.ndarray, times: np.ndarray, samples: np.ndarray) -> Iterator[list]:
    """Rows t-major, x-minor from samples of shape (T, n, nodes)."""
    for k, t in enumerate(times):
        for i, position in enumerate(x):
            yield [float(position), float(t)] + [float(v) for v in samples[k, :, i]]
