"""First-order upwind time stepping of the initial-boundary value problem.

Used as an independent check: in dissipative regimes the stepped solution relaxes
to the time-periodic one without any use of the mode machinery.
"""
from dataclasses import dataclass, replace
from typing import List, Optional
import logging
import math

import numpy as np
from scipy.integrate import trapezoid

from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import CFLViolation, ProblemValidationError
from hyperperiodic.schemas.problem import ProblemData
from hyperperiodic.services.fourier import FourierField, ProfileGrid, fit_grid

logger = logging.getLogger(__name__)

CFL_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class UpwindScheme:
    """Node coefficients of the upwind splitting on the global nodes of a grid.

    forward[j, i] = max(a_j, 0) on the cell left of node i, backward[j, i] =
    min(a_j, 0) on the cell to its right; coupling[j, :, i] is row j of b taken
    from the upwind cell of component j.
    """
    x: np.ndarray
    forward: np.ndarray
    backward: np.ndarray
    dx_left: np.ndarray
    dx_right: np.ndarray
    coupling: np.ndarray
    max_speed: float

    @classmethod
    def build(cls, p: ProblemData, grid: ProfileGrid) -> "UpwindScheme":
        R = grid.subdivisions
        nodes = grid.global_size
        left_cell = np.maximum((np.arange(nodes) - 1) // R, 0)
        left_cell[0] = 0
        right_cell = np.minimum(np.arange(nodes) // R, grid.cells - 1)
        a = p.a_values

        forward = np.maximum(a[:, left_cell], 0.0)
        forward[:, 0] = 0.0
        backward = np.minimum(a[:, right_cell], 0.0)
        backward[:, -1] = 0.0

        spacing = grid.spacing
        dx_left = spacing[left_cell]
        dx_right = spacing[right_cell]

        upwind = np.where(a[:, left_cell] > 0, left_cell[None, :], right_cell[None, :])
        b = p.b_values
        coupling = np.stack([b[j][:, upwind[j]] for j in range(p.n)])
        return cls(grid.global_x, forward, backward, dx_left, dx_right, coupling, float(np.max(np.abs(a))))

    def tendency(self, u: np.ndarray, f: np.ndarray) -> np.ndarray:
        """-a ∂ₓu - bu + f at every node, upwinded."""
        du = np.zeros_like(u)
        du[:, 1:] -= self.forward[:, 1:] * (u[:, 1:] - u[:, :-1]) / self.dx_left[1:]
        du[:, :-1] -= self.backward[:, :-1] * (u[:, 1:] - u[:, :-1]) / self.dx_right[:-1]
        du -= np.einsum("jki,ki->ji", self.coupling, u)
        return du + f


@dataclass(frozen=True, eq=False)
class SteppingState:
    grid: ProfileGrid
    scheme: UpwindScheme
    time: float
    values: np.ndarray
    cfl: float
    dt: float

    @property
    def courant(self) -> float:
        return self.dt * self.scheme.max_speed / float(np.min(self.grid.spacing))


def _check_boundary_signs(p: ProblemData):
    a = p.a_values
    for cell, label in ((0, "x = 0"), (-1, "x = 1")):
        if not (np.all(a[: p.m, cell] > 0) and np.all(a[p.m:, cell] < 0)):
            raise ProblemValidationError(
                f"upwind stepping needs a_j > 0 for j <= m and a_j < 0 for j > m next to {label}",
                {"cell": cell},
            )


def initial_state(
    p: ProblemData,
    grid: ProfileGrid,
    cfl: float,
    dt: float,
    values: Optional[np.ndarray] = None,
) -> SteppingState:
    if not 0 < cfl <= 1:
        raise CFLViolation(f"CFL number {cfl} outside (0, 1]", {"cfl": cfl})
    _check_boundary_signs(p)
    scheme = UpwindScheme.build(p, grid)
    values = np.zeros((p.n, grid.global_size)) if values is None else np.array(values, dtype=float)
    return SteppingState(grid, scheme, 0.0, values, cfl, dt)


def step(state: SteppingState, p: ProblemData, f: np.ndarray) -> SteppingState:
    """One explicit Euler step; inflow nodes follow the reflection rows afterwards.

    Raises:
        CFLViolation: if dt exceeds the CFL limit of the grid.
    """
    if state.courant > 1.0 + CFL_SLACK:
        raise CFLViolation(
            f"time step {state.dt:.3e} violates the CFL condition (courant {state.courant:.3f})",
            {"dt": state.dt, "courant": state.courant},
        )
    u = state.values + state.dt * state.scheme.tendency(state.values, f)
    m = p.m
    u[:m, 0] = p.r0_matrix @ u[m:, 0]
    u[m:, -1] = p.r1_matrix @ u[:m, -1]
    return replace(state, time=state.time + state.dt, values=u)


@dataclass
class OracleRun:
    grid: ProfileGrid
    times: np.ndarray
    samples: np.ndarray
    deviation_history: List[float]
    dt: float
    steps_per_period: int

    @property
    def final_deviation(self) -> float:
        return self.deviation_history[-1] if self.deviation_history else float("nan")


def period_l2(x: np.ndarray, difference: np.ndarray) -> float:
    """sqrt of the period mean of ∫|v|² dx for samples of shape (T, n, nodes)."""
    integral = trapezoid(np.sum(np.abs(difference) ** 2, axis=1), x, axis=-1)
    return float(math.sqrt(float(np.mean(integral))))


def oracle_grid(forcing: FourierField, cells: int) -> FourierField:
    """Forcing refined to at least `cells` oracle cells in total."""
    per_cell = max(1, int(math.ceil(cells / forcing.grid.cells)))
    return fit_grid(forcing, per_cell)


def run_to_periodic(
    p: ProblemData,
    forcing: FourierField,
    periods: Optional[int] = None,
    samples_per_period: Optional[int] = None,
    cfl: Optional[float] = None,
    initial: Optional[np.ndarray] = None,
) -> OracleRun:
    """Integrate `periods` forcing periods and sample the last one.

    The grid is the forcing's own grid; refine the forcing first (oracle_grid) for
    a finer oracle. Deviation k is the L² distance between the samples of periods
    k and k-1.
    """
    settings = get_settings()
    periods = settings.ORACLE_PERIODS if periods is None else periods
    samples_per_period = settings.ORACLE_SAMPLES if samples_per_period is None else samples_per_period
    cfl = settings.ORACLE_CFL if cfl is None else cfl
    if not 0 < cfl <= 1:
        raise CFLViolation(f"CFL number {cfl} outside (0, 1]", {"cfl": cfl})
    if periods < 1 or samples_per_period < 1:
        raise ProblemValidationError(
            f"need at least one period and one sample, got {periods} and {samples_per_period}"
        )

    grid = forcing.grid
    dt_max = cfl * float(np.min(grid.spacing)) / float(np.max(np.abs(p.a_values)))
    per_sample = int(math.ceil(2.0 * math.pi / (dt_max * samples_per_period)))
    steps_per_period = per_sample * samples_per_period
    dt = 2.0 * math.pi / steps_per_period

    state = initial_state(p, grid, cfl, dt, initial)
    modes = grid.collapse(forcing.modes)
    indices = forcing.indices

    def forcing_at(t: float) -> np.ndarray:
        return np.einsum("s,sjx->jx", np.exp(1j * indices * t), modes).real

    logger.info(
        f"Oracle run: {periods} periods, {steps_per_period} steps per period",
        extra={"cells": grid.cells * grid.subdivisions, "dt": dt, "cfl": cfl},
    )
    previous = None
    history: List[float] = []
    current = np.empty((samples_per_period,) + state.values.shape)
    times = 2.0 * math.pi * np.arange(samples_per_period) / samples_per_period
    for period in range(periods):
        for k in range(steps_per_period):
            if k % per_sample == 0:
                current[k // per_sample] = state.values
            local = k * dt
            state = step(state, p, forcing_at(local))
        if previous is not None:
            history.append(period_l2(state.scheme.x, current - previous))
        previous = current.copy()
    if history:
        logger.debug("Final periodicity deviation %.3e", history[-1])
    return OracleRun(grid, times, previous, history, dt, steps_per_period)
