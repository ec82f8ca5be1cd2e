"""Problem and forcing builders shared by unit and integration tests."""
import json
import math
from pathlib import Path
from typing import Dict

import numpy as np

from hyperperiodic.schemas.problem import ProblemData, ProblemFile
from hyperperiodic.services.fourier import FourierField, ProfileGrid, from_modes
from hyperperiodic.services.problem_model import build_problem

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture_problem(name: str) -> ProblemData:
    document = ProblemFile.model_validate(json.loads((FIXTURES / name).read_text()))
    return build_problem(document)


def two_component(
    a1: float,
    a2: float,
    r0: float,
    r1: float,
    b=((0.0, 0.0), (0.0, 0.0)),
    breakpoints=(0.0, 1.0),
) -> ProblemData:
    """2×2 problem with constant speeds and couplings on the given partition."""
    cells = len(breakpoints) - 1
    return ProblemData(
        n=2, m=1,
        partition={"breakpoints": list(breakpoints)},
        a=[[a1] * cells, [a2] * cells],
        b=[[[float(v)] * cells for v in row] for row in b],
        r0=[[r0]], r1=[[r1]],
    )


def reflection_instance(alpha: float) -> ProblemData:
    """a = (α, -α), b = 0, r⁰ = 1, r¹ = -1: R_s = -e^{-2is/α}."""
    return two_component(alpha, -alpha, 1.0, -1.0)


def family_one_alpha(k: int, l: int) -> float:
    return (2 * l + 1) / (k * math.pi)


def family_two_alpha(p: int, q: int) -> float:
    return 2 * q / ((2 * p + 1) * math.pi)


def random_problem(
    rng: np.random.Generator,
    n: int = 2,
    m: int = 1,
    cells: int = 3,
    coupling: float = 0.3,
    reflection: float = 0.4,
    constant_speeds: bool = False,
) -> ProblemData:
    """Problem with conventional signs, damping on the diagonal and small reflections."""
    inner = np.sort(rng.uniform(0.1, 0.9, size=cells - 1))
    breakpoints = [0.0] + [float(x) for x in inner] + [1.0]
    speeds = rng.uniform(0.6, 1.8, size=(n, 1 if constant_speeds else cells))
    speeds = np.broadcast_to(speeds, (n, cells)).copy()
    speeds[m:] *= -1.0
    b = coupling * rng.uniform(-1.0, 1.0, size=(n, n, cells))
    b[np.arange(n), np.arange(n)] = rng.uniform(0.2, 1.0, size=(n, cells))
    return ProblemData(
        n=n, m=m,
        partition={"breakpoints": breakpoints},
        a=speeds.tolist(), b=b.tolist(),
        r0=(reflection * rng.uniform(-1.0, 1.0, size=(m, n - m))).tolist(),
        r1=(reflection * rng.uniform(-1.0, 1.0, size=(n - m, m))).tolist(),
    )


def random_forcing(
    rng: np.random.Generator,
    p: ProblemData,
    S: int,
    subdivisions: int = 16,
    smooth: bool = True,
) -> FourierField:
    """Hermitian forcing; smooth profiles are low-order polynomials per cell."""
    grid = ProfileGrid.for_problem(p, subdivisions)
    positive: Dict[int, np.ndarray] = {}
    x = grid.x
    for s in range(S + 1):
        shape = (p.n, 1, 1)
        if smooth:
            c0 = rng.normal(size=shape) + 1j * rng.normal(size=shape)
            c1 = rng.normal(size=shape) + 1j * rng.normal(size=shape)
            profile = (c0 + c1 * x[None]) / (1.0 + s * s)
        else:
            profile = rng.normal(size=(p.n,) + x.shape) + 1j * rng.normal(size=(p.n,) + x.shape)
        positive[s] = profile
    return from_modes(grid, p.n, S, positive)


