"""Forward operators, residuals, the duality identity and sensitivity checks."""
from dataclasses import dataclass
from typing import Literal
import logging

import numpy as np

from hyperperiodic.exceptions import ProblemValidationError
from hyperperiodic.schemas.problem import ProblemData
from hyperperiodic.services.coupled import (
    ModePropagator,
    augmented_solve_field,
    boundary_matrices,
    build_propagator,
    coupled_solve_field,
    sources,
)
from hyperperiodic.services.fourier import FourierField, w_norm
from hyperperiodic.utils.linalg import phi_series
from hyperperiodic.utils.quadrature import pl_inner, pl_norm_sq

logger = logging.getLogger(__name__)

Side = Literal["direct", "adjoint"]

MIN_STENCIL_SUBDIVISIONS = 4
BOUNDARY_TOLERANCE = 1e-8
IMAGINARY_TOLERANCE = 1e-12
STENCIL_REACH = 2e-3


def fd_derivative(values: np.ndarray, spacing: np.ndarray) -> np.ndarray:
    """Fourth-order x-derivative of per-cell node values (..., cells, R+1).

    Central five-point stencil inside each cell, one-sided five-point stencils at
    the two nodes next to either cell end.
    """
    R = values.shape[-1] - 1
    if R < MIN_STENCIL_SUBDIVISIONS:
        raise ProblemValidationError(
            f"differentiation needs at least {MIN_STENCIL_SUBDIVISIONS} subdivisions per cell, got {R}"
        )
    u = values
    d = np.empty_like(u)
    d[..., 2:-2] = -u[..., 4:] + 8.0 * u[..., 3:-1] - 8.0 * u[..., 1:-3] + u[..., :-4]
    d[..., 0] = -25.0 * u[..., 0] + 48.0 * u[..., 1] - 36.0 * u[..., 2] + 16.0 * u[..., 3] - 3.0 * u[..., 4]
    d[..., 1] = -3.0 * u[..., 0] - 10.0 * u[..., 1] + 18.0 * u[..., 2] - 6.0 * u[..., 3] + u[..., 4]
    d[..., -1] = 25.0 * u[..., -1] - 48.0 * u[..., -2] + 36.0 * u[..., -3] - 16.0 * u[..., -4] + 3.0 * u[..., -5]
    d[..., -2] = 3.0 * u[..., -1] + 10.0 * u[..., -2] - 18.0 * u[..., -3] + 6.0 * u[..., -4] - u[..., -5]
    return d / (12.0 * spacing[:, None])


def apply_operator(p: ProblemData, u: FourierField, side: Side = "direct") -> FourierField:
    """is u + a u' + b u per mode (direct) or -is u - a u' + bᵀu (adjoint)."""
    if u.n != p.n or u.grid.cells != p.cells:
        raise ProblemValidationError("field does not match the problem's components or cells")
    derivative = fd_derivative(u.modes, u.grid.spacing)
    s = u.indices[:, None, None, None]
    a = p.a_values[None, :, :, None]
    b = p.b_values
    if side == "direct":
        result = 1j * s * u.modes + a * derivative + np.einsum("jkc,skcr->sjcr", b, u.modes)
    else:
        result = -1j * s * u.modes - a * derivative + np.einsum("kjc,skcr->sjcr", b, u.modes)
    return u.with_modes(result)


@dataclass
class ModeResiduals:
    """Residuals per mode (index s + S) plus the weighted field-level values.

    interface is the largest jump of a profile across an interior breakpoint,
    relative to the largest profile value.
    """
    pde: np.ndarray
    boundary: np.ndarray
    field_pde: float
    field_boundary: float
    interface: float = 0.0


def boundary_defects(p: ProblemData, u: FourierField, side: Side = "direct") -> np.ndarray:
    """max |B0 u^s(0) + B1 u^s(1)| relative to max |u^s|, per mode."""
    B0, B1 = boundary_matrices(p, side)
    left = u.modes[:, :, 0, 0]
    right = u.modes[:, :, -1, -1]
    defect = np.abs(left @ B0.T + right @ B1.T).max(axis=1)
    scale = np.abs(u.modes).reshape(u.modes.shape[0], -1).max(axis=1)
    return np.where(scale > 0, defect / np.where(scale > 0, scale, 1.0), 0.0)


def interface_jumps(u: FourierField) -> float:
    if u.grid.cells < 2:
        return 0.0
    jump = np.abs(u.modes[:, :, 1:, 0] - u.modes[:, :, :-1, -1]).max()
    scale = u.max_abs()
    return float(jump / scale) if scale > 0 else 0.0


def local_derivative(prop: ModePropagator, u: np.ndarray, g: np.ndarray) -> np.ndarray:
    """u' at every stored node from five-point stencils on the exact local solution.

    Right of node i the stencil points follow u' = Mu + g forward from the stored
    u_i; left of it they follow the same equation backward from E u_{i-1} + inc_{i-1},
    so any mismatch between neighbouring nodes shows up in the derivative. The
    stencil width stays below STENCIL_REACH/‖M‖∞ and an eighth of the subnode spacing.
    """
    M = prop.generators
    h = prop.grid.spacing
    kappa = np.abs(M).sum(axis=-1).max(axis=-1)
    eta = np.minimum(h / 8.0, STENCIL_REACH / np.maximum(kappa, 1.0))
    offsets = np.array([-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0])
    tau = eta[:, None] * offsets[None, :]
    E, phi1, phi2 = phi_series(M[:, None] * tau[:, :, None, None])
    phi1 = tau[:, :, None, None] * phi1
    phi2 = tau[:, :, None, None] ** 2 * phi2

    slope = np.diff(g, axis=-1) / h[:, None]
    ahead = np.concatenate([slope, slope[..., -1:]], axis=-1)
    behind = np.concatenate([slope[..., :1], slope], axis=-1)
    arrived = np.array(u, dtype=complex)
    arrived[..., 1:] = np.einsum("cab,bci->aci", prop.steps, u[..., :-1]) + np.moveaxis(prop.increments(g), -1, 0)

    def point(k: int) -> np.ndarray:
        start, rate = (arrived, behind) if offsets[k] < 0 else (u, ahead)
        return (
            np.einsum("cab,bci->aci", E[:, k], start)
            + np.einsum("cab,bci->aci", phi1[:, k], g)
            + np.einsum("cab,bci->aci", phi2[:, k], rate)
        )

    v = {int(offsets[k]): point(k) for k in range(offsets.size)}
    d = (v[-2] - 8.0 * v[-1] + 8.0 * v[1] - v[2])
    d[..., 0] = (-25.0 * u[..., 0] + 48.0 * v[1][..., 0] - 36.0 * v[2][..., 0]
                 + 16.0 * v[3][..., 0] - 3.0 * v[4][..., 0])
    d[..., -1] = (25.0 * u[..., -1] - 48.0 * v[-1][..., -1] + 36.0 * v[-2][..., -1]
                  - 16.0 * v[-3][..., -1] + 3.0 * v[-4][..., -1])
    return d / (12.0 * eta[:, None])


def mode_residuals(
    p: ProblemData,
    u: FourierField,
    f: FourierField,
    side: Side = "direct",
    gamma: float = 0.0,
) -> ModeResiduals:
    """PDE residual ‖Au^s - f^s‖ relative to ‖f^s‖ and boundary-row residuals.

    Au^s is taken node by node from local_derivative, so it vanishes to rounding
    exactly when the stored nodes lie on one solution of the mode equation with
    the piecewise-linear forcing. The field-level PDE value is
    w_norm(Au - f, γ)/w_norm(f, γ), or the absolute w_norm when f vanishes.
    """
    if u.n != p.n or u.grid.cells != p.cells or not u.grid.matches(f.grid) or u.S != f.S:
        raise ProblemValidationError("fields do not match the problem or each other")
    a = p.a_values[:, :, None]
    residual = np.zeros_like(u.modes)
    for index, s in enumerate(u.indices):
        u_s, f_s = u.modes[index], f.modes[index]
        if not np.any(u_s) and not np.any(f_s):
            continue
        prop = build_propagator(p, int(s), u.grid, side)
        g = sources(p, f_s, side)
        drift = np.einsum("cab,bci->aci", prop.generators, u_s)
        residual[index] = a * (local_derivative(prop, u_s, g) - drift - g)
    residual = u.with_modes(residual)
    spacing = u.grid.spacing
    r_norm = np.sqrt(pl_norm_sq(residual.modes, spacing).sum(axis=1))
    f_norm = np.sqrt(pl_norm_sq(f.modes, spacing).sum(axis=1))
    per_mode = np.where(f_norm > 0, r_norm / np.where(f_norm > 0, f_norm, 1.0), r_norm)
    forcing_scale = w_norm(f, gamma)
    field_pde = w_norm(residual, gamma) / forcing_scale if forcing_scale > 0 else w_norm(residual, gamma)
    boundary = boundary_defects(p, u, side)
    return ModeResiduals(
        per_mode, boundary, float(field_pde), float(boundary.max(initial=0.0)), interface_jumps(u)
    )


def inner_product(f: FourierField, u: FourierField) -> float:
    """(1/2π)∫∫⟨f, u⟩ dx dt, i.e. Re Σ_s ∫ f^s·conj(u^s) dx."""
    if f.modes.shape != u.modes.shape or not f.grid.matches(u.grid):
        raise ProblemValidationError(
            f"fields of shapes {f.modes.shape} and {u.modes.shape} cannot be paired"
        )
    value = complex(pl_inner(f.modes, u.modes, f.grid.spacing).sum())
    scale = max(1.0, f.max_abs() * u.max_abs())
    if abs(value.imag) > IMAGINARY_TOLERANCE * scale:
        logger.warning("Pairing has an imaginary part %.3e; fields are not real", value.imag)
    return value.real


def _solution_pairing(p: ProblemData, weight: FourierField, u: FourierField, f: FourierField, side: Side) -> complex:
    """Σ_s ∫ weight^s·conj(u^s) with u^s the exact mode solution for forcing f^s through its nodes."""
    total = 0j
    for index, s in enumerate(u.indices):
        if not np.any(weight.modes[index]) or not np.any(u.modes[index]):
            continue
        prop = build_propagator(p, int(s), u.grid, side)
        total += prop.pair(weight.modes[index], u.modes[index], sources(p, f.modes[index], side))
    return total


def duality_check(
    p: ProblemData,
    u: FourierField,
    u_adj: FourierField,
    f: FourierField,
    f_adj: FourierField,
) -> float:
    """|⟨(A+B)u, ũ⟩ - ⟨u, (Ã+B̃)ũ⟩| for (A+B)u = f on the direct and (Ã+B̃)ũ = f̃ on the adjoint rows.

    Both sides pair a piecewise-linear forcing with the exact solution through the
    stored nodes of the other field: ⟨f, ũ⟩ on the left and ⟨u, f̃⟩ on the right.

    Raises:
        ProblemValidationError: if some speed is not constant on [0,1], the fields
            do not share one grid, or a field violates its boundary rows.
    """
    a = p.a_values
    if np.any(a != a[:, :1]):
        raise ProblemValidationError("the duality check needs every speed constant on [0,1]")
    shapes = {field_.modes.shape for field_ in (u, u_adj, f, f_adj)}
    if len(shapes) != 1 or not all(u.grid.matches(field_.grid) for field_ in (u_adj, f, f_adj)):
        raise ProblemValidationError("the duality check needs four fields on one grid")
    for field_, side in ((u, "direct"), (u_adj, "adjoint")):
        worst = float(boundary_defects(p, field_, side).max(initial=0.0))
        if worst > BOUNDARY_TOLERANCE:
            raise ProblemValidationError(
                f"{side} field violates its boundary rows (relative defect {worst:.3e})",
                {"side": side, "defect": worst},
            )
    lhs = _solution_pairing(p, f, u_adj, f_adj, "adjoint")
    rhs = np.conj(_solution_pairing(p, f_adj, u, f, "direct"))
    return abs(lhs.real - rhs.real)


def _cell_major(values: np.ndarray) -> np.ndarray:
    return np.moveaxis(values, -1, 0)


def sensitivity_b(p: ProblemData, F: FourierField, b_direction: np.ndarray) -> FourierField:
    """Derivative of the solution in direction b̄, shape (n, n, cells) per-cell values."""
    b_direction = np.asarray(b_direction, dtype=float).reshape(p.b_values.shape)
    inverse = (1.0 / p.a_values).T[:, :, None]
    dM = -inverse * _cell_major(b_direction)
    _, derivative = augmented_solve_field(
        p, F,
        generator_derivative=lambda s: dM,
        source_derivative=lambda f_s: np.zeros_like(f_s, dtype=complex),
    )
    return derivative


def sensitivity_a(p: ProblemData, F: FourierField, a_direction: np.ndarray) -> FourierField:
    """Derivative of the solution in direction ā, shape (n, cells) per-cell values."""
    a_direction = np.asarray(a_direction, dtype=float).reshape(p.a_values.shape)
    weight = a_direction / p.a_values ** 2
    b_cells = _cell_major(p.b_values)
    n = p.n

    def generator_derivative(s: int) -> np.ndarray:
        return weight.T[:, :, None] * (1j * s * np.eye(n) + b_cells)

    def source_derivative(f_s: np.ndarray) -> np.ndarray:
        return -weight[:, :, None] * f_s

    _, derivative = augmented_solve_field(p, F, generator_derivative, source_derivative)
    return derivative


def finite_difference_b(p: ProblemData, F: FourierField, b_direction: np.ndarray, h: float = 1e-5) -> FourierField:
    b_direction = np.asarray(b_direction, dtype=float).reshape(p.b_values.shape)
    plus = coupled_solve_field(p.with_coefficients(b=p.b_values + h * b_direction), F)
    minus = coupled_solve_field(p.with_coefficients(b=p.b_values - h * b_direction), F)
    return (plus - minus) * (0.5 / h)


def finite_difference_a(p: ProblemData, F: FourierField, a_direction: np.ndarray, h: float = 1e-5) -> FourierField:
    a_direction = np.asarray(a_direction, dtype=float).reshape(p.a_values.shape)
    plus = coupled_solve_field(p.with_coefficients(a=p.a_values + h * a_direction), F)
    minus = coupled_solve_field(p.with_coefficients(a=p.a_values - h * a_direction), F)
    return (plus - minus) * (0.5 / h)


def sensitivity_mismatch(analytic: FourierField, reference: FourierField, gamma: float) -> tuple:
    """(absolute, relative) w_norm distance at max(γ, 0)."""
    gamma = max(gamma, 0.0)
    difference = w_norm(analytic - reference, gamma)
    scale = w_norm(reference, gamma)
    return difference, difference / scale if scale > 0 else difference
