"""Coupled mode problems through matrix-exponential propagators.

Per mode s the direct problem is a u' + (is + b)u = f with the reflection rows at
x = 0 and x = 1; the adjoint problem is -is φ - a φ' + bᵀφ = f with the weighted
reflection rows. Both become u' = M_c u + g on every cell, integrated on subcells
with φ-functions, so piecewise-linear forcing is integrated exactly.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Literal, Optional, Tuple
import logging

import numpy as np

from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import NonContractive, ResonanceError, ResonantMode
from hyperperiodic.schemas.problem import ProblemData
from hyperperiodic.services.fourier import FourierField, ProfileGrid, from_modes
from hyperperiodic.utils.linalg import (
    left_null_space,
    min_norm_solve,
    moment_blocks,
    null_space,
    phi_blocks,
    relative_sigma_min,
)
from hyperperiodic.utils.quadrature import pl_inner, pl_norm_sq

logger = logging.getLogger(__name__)

Side = Literal["direct", "adjoint"]


def generators(a: np.ndarray, b: np.ndarray, s: int, side: Side = "direct") -> np.ndarray:
    """Cell matrices M_c, shape (cells, n, n).

    direct: -a⁻¹(is + b); adjoint: a⁻¹(bᵀ - is).
    """
    n = a.shape[0]
    b_cells = np.moveaxis(np.asarray(b, dtype=float), -1, 0)
    shift = 1j * s * np.eye(n)
    inverse = (1.0 / np.asarray(a, dtype=float)).T[:, :, None]
    if side == "direct":
        return -inverse * (shift + b_cells)
    return inverse * (np.transpose(b_cells, (0, 2, 1)) - shift)


def sources(p: ProblemData, f_s: np.ndarray, side: Side = "direct") -> np.ndarray:
    """Right-hand side g of u' = Mu + g, shape (n, cells, R+1)."""
    g = np.asarray(f_s, dtype=complex) / p.a_values[:, :, None]
    return g if side == "direct" else -g


def boundary_matrices(p: ProblemData, side: Side = "direct") -> Tuple[np.ndarray, np.ndarray]:
    """B0, B1 with B0 u(0) + B1 u(1) = 0 encoding the boundary rows of `side`."""
    n, m = p.n, p.m
    r0, r1 = p.r0_matrix, p.r1_matrix
    B0 = np.zeros((n, n))
    B1 = np.zeros((n, n))
    if side == "direct":
        B0[:m, :m] = np.eye(m)
        B0[:m, m:] = -r0
        B1[m:, m:] = np.eye(n - m)
        B1[m:, :m] = -r1
        return B0, B1
    a0 = p.a_values[:, 0]
    a1 = p.a_values[:, -1]
    # a_j(0)φ_j(0) + Σ_{k<=m} r⁰_kj a_k(0)φ_k(0) = 0 for j > m
    B0[m:, m:] = np.diag(a0[m:])
    B0[m:, :m] = r0.T * a0[None, :m]
    # a_j(1)φ_j(1) + Σ_{k>m} r¹_kj a_k(1)φ_k(1) = 0 for j <= m
    B1[:m, :m] = np.diag(a1[:m])
    B1[:m, m:] = r1.T * a1[None, m:]
    return B0, B1


def is_formal_adjoint(p: ProblemData) -> bool:
    """True when some speed jumps across a breakpoint."""
    a = p.a_values
    return bool(np.any(a != a[:, :1]))


@dataclass(frozen=True, eq=False)
class ModePropagator:
    """Subcell propagators of u' = M_c u + g on a profile grid.

    steps[c] = exp(M_c h), phi1[c] = φ₁(M_c h), phi2[c] = φ₂(M_c h) with h the
    subnode spacing of cell c; fundamental[c] = Φ(x_c), Φ(x_0) = I.
    """
    s: int
    side: str
    grid: ProfileGrid
    generators: np.ndarray
    steps: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    fundamental: np.ndarray

    @classmethod
    def from_generators(cls, s: int, side: str, grid: ProfileGrid, cell_matrices: np.ndarray) -> "ModePropagator":
        cells, d, _ = cell_matrices.shape
        steps = np.empty((cells, d, d), dtype=complex)
        phi1 = np.empty_like(steps)
        phi2 = np.empty_like(steps)
        fundamental = np.empty((cells + 1, d, d), dtype=complex)
        fundamental[0] = np.eye(d)
        for c in range(cells):
            steps[c], phi1[c], phi2[c] = phi_blocks(cell_matrices[c], grid.spacing[c])
            cell_exponential = np.linalg.matrix_power(steps[c], grid.subdivisions)
            fundamental[c + 1] = cell_exponential @ fundamental[c]
        return cls(s, side, grid, cell_matrices, steps, phi1, phi2, fundamental)

    @property
    def dimension(self) -> int:
        return self.generators.shape[-1]

    def march(self, start: np.ndarray, increments: Optional[np.ndarray] = None) -> np.ndarray:
        """Run Y_{i+1} = E Y_i + inc_i over every subcell.

        start has shape (d, k); increments (cells, R, d) or None. Returns (d, k, cells, R+1).
        """
        cells, R = self.grid.cells, self.grid.subdivisions
        current = np.asarray(start, dtype=complex)
        out = np.empty((cells, R + 1) + current.shape, dtype=complex)
        for c in range(cells):
            E = self.steps[c]
            out[c, 0] = current
            for i in range(R):
                current = E @ current
                if increments is not None:
                    current = current + increments[c, i][:, None]
                out[c, i + 1] = current
        return np.moveaxis(out, (0, 1), (-2, -1))

    def increments(self, g: np.ndarray) -> np.ndarray:
        """h φ₁ g_i + h φ₂ (g_{i+1} - g_i) per subcell, shape (cells, R, d)."""
        h = self.grid.spacing[:, None, None]
        left = np.einsum("cab,bci->cia", self.phi1, g[..., :-1])
        jump = np.einsum("cab,bci->cia", self.phi2, g[..., 1:] - g[..., :-1])
        return h * (left + jump)

    def particular(self, g: np.ndarray) -> np.ndarray:
        """Solution with zero initial value, shape (d, cells, R+1)."""
        start = np.zeros((self.dimension, 1), dtype=complex)
        return self.march(start, self.increments(g))[:, 0]

    @cached_property
    def fundamental_profiles(self) -> np.ndarray:
        """Φ(x) at every node, shape (d, d, cells, R+1)."""
        return self.march(np.eye(self.dimension, dtype=complex))

    @property
    def end(self) -> np.ndarray:
        """Φ(1), the product of the cell exponentials."""
        return self.fundamental[-1]

    @cached_property
    def moments(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-cell moment blocks, each of shape (cells, 3, d, d); see moment_blocks."""
        blocks = [moment_blocks(self.generators[c], self.grid.spacing[c]) for c in range(self.grid.cells)]
        return np.stack([K for K, _ in blocks]), np.stack([L for _, L in blocks])

    def pair(self, f: np.ndarray, u: np.ndarray, g: Optional[np.ndarray] = None) -> complex:
        """∫₀¹ f·conj(u) dx with f piecewise linear and u the exact solution of u' = Mu + g
        started afresh from its stored value at every subnode.

        f, u and g have shape (d, cells, R+1); g = None is the homogeneous equation.
        """
        K, L = self.moments
        h = self.grid.spacing[:, None]
        g = np.zeros_like(u, dtype=complex) if g is None else g
        start, g0 = u[..., :-1], g[..., :-1]
        slope = (g[..., 1:] - g0) / h
        terms = (start, g0, slope)
        first = sum(np.einsum("cab,bci->aci", K[:, k], terms[k]) for k in range(3))
        second = h * first - sum(np.einsum("cab,bci->aci", L[:, k], terms[k]) for k in range(3))
        f0 = f[..., :-1]
        f_slope = (f[..., 1:] - f0) / h
        return complex(np.sum(f0 * np.conj(first)) + np.sum(f_slope * np.conj(second)))


def build_propagator(
    p: ProblemData,
    s: int,
    grid: Optional[ProfileGrid] = None,
    side: Side = "direct",
) -> ModePropagator:
    grid = ProfileGrid.for_problem(p, 1) if grid is None else grid
    return ModePropagator.from_generators(s, side, grid, generators(p.a_values, p.b_values, s, side))


def _grid_of(p: ProblemData, profiles: np.ndarray) -> ProfileGrid:
    return ProfileGrid.for_problem(p, np.asarray(profiles).shape[-1] - 1)


def _boundary_system(prop: ModePropagator, B0: np.ndarray, B1: np.ndarray) -> np.ndarray:
    return B0 + B1 @ prop.end


def _check_resonance(K: np.ndarray, s: int):
    ratio = relative_sigma_min(K)
    if ratio < get_settings().RESONANCE_THRESHOLD:
        logger.debug("Mode %d boundary system singular", s, extra={"s": s, "sigma_ratio": ratio})
        raise ResonantMode(s, ratio, measure="sigma_ratio")


def _solve_with_increments(prop: ModePropagator, K: np.ndarray, B1: np.ndarray, increments: np.ndarray) -> np.ndarray:
    P = prop.march(np.zeros((prop.dimension, 1), dtype=complex), increments)[:, 0]
    U0 = np.linalg.solve(K, -B1 @ P[:, -1, -1])
    return np.einsum("abcr,b->acr", prop.fundamental_profiles, U0) + P


def solve_mode_system(
    prop: ModePropagator,
    B0: np.ndarray,
    B1: np.ndarray,
    g: np.ndarray,
) -> np.ndarray:
    """Profiles of u' = Mu + g with B0 u(0) + B1 u(1) = 0, shape (d, cells, R+1)."""
    K = _boundary_system(prop, B0, B1)
    _check_resonance(K, prop.s)
    return _solve_with_increments(prop, K, B1, prop.increments(g))


def coupled_mode_solve(p: ProblemData, s: int, f_s: np.ndarray, side: Side = "direct") -> np.ndarray:
    """Solve mode s of the full coupled system (or its adjoint).

    Raises:
        ResonantMode: when σ_min/σ_max of the boundary system is below the resonance threshold.
    """
    prop = build_propagator(p, s, _grid_of(p, f_s), side)
    B0, B1 = boundary_matrices(p, side)
    return solve_mode_system(prop, B0, B1, sources(p, f_s, side))


def mode_norm(profiles: np.ndarray, grid: ProfileGrid) -> float:
    """L² norm over (0,1) of one mode, all components."""
    return float(np.sqrt(pl_norm_sq(profiles, grid.spacing).sum()))


def split_coupling(p: ProblemData) -> Tuple[ProblemData, np.ndarray]:
    """(problem with b⁰ = diagonal part of b, off-diagonal b¹ array)."""
    b = p.b_values
    diagonal = np.zeros_like(b)
    index = np.arange(p.n)
    diagonal[index, index] = b[index, index]
    return p.with_coefficients(b=diagonal), b - diagonal


@dataclass
class RichardsonResult:
    profiles: np.ndarray
    iterations: int
    ratios: List[float] = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return self.ratios[-1] if self.ratios else 0.0


def richardson_solve(
    p: ProblemData,
    s: int,
    f_s: np.ndarray,
    tol: Optional[float] = None,
    maxit: Optional[int] = None,
) -> RichardsonResult:
    """Fixed point of u ← A_s⁻¹(f - b¹u) with A_s the decoupled mode operator.

    Every sweep marches the decoupled propagator. The coupling enters each subcell
    as the difference between the coupled and the decoupled transfer of the
    current iterate's node values, i.e. b¹u integrated along the exact coupled
    trajectory, so the fixed point is the coupled solution at the same nodes.
    Stops once successive iterates differ by at most tol relative to the iterate
    norm (mode L²).

    Raises:
        ResonantMode: if the decoupled part is resonant at s.
        NonContractive: when the update does not shrink or maxit is exhausted.
    """
    settings = get_settings()
    tol = settings.RICHARDSON_TOL if tol is None else tol
    maxit = settings.RICHARDSON_MAXIT if maxit is None else maxit
    grid = _grid_of(p, f_s)
    diagonal_problem, _ = split_coupling(p)
    coupled = build_propagator(p, s, grid)
    decoupled = build_propagator(diagonal_problem, s, grid)
    B0, B1 = boundary_matrices(p)
    K = _boundary_system(decoupled, B0, B1)
    _check_resonance(K, s)
    forcing = coupled.increments(sources(p, f_s))
    transfer = coupled.steps - decoupled.steps

    def sweep(u: Optional[np.ndarray]) -> np.ndarray:
        increments = forcing
        if u is not None:
            increments = forcing + np.einsum("cab,bci->cia", transfer, u[..., :-1])
        return _solve_with_increments(decoupled, K, B1, increments)

    u = sweep(None)
    previous_step = None
    ratios: List[float] = []
    for iteration in range(1, maxit + 1):
        update = sweep(u)
        step = mode_norm(update - u, grid)
        scale = mode_norm(update, grid)
        u = update
        if previous_step is not None and previous_step > 0:
            ratios.append(step / previous_step)
        if step <= tol * scale or step == 0.0:
            logger.debug(
                "Richardson converged at mode %d", s,
                extra={"s": s, "iterations": iteration, "step": step},
            )
            return RichardsonResult(u, iteration, ratios)
        if len(ratios) >= 2 and ratios[-1] >= 1.0 and ratios[-2] >= 1.0:
            raise NonContractive(ratios[-1], iteration)
        previous_step = step
    raise NonContractive(ratios[-1] if ratios else float("nan"), maxit)


@dataclass
class KernelEntry:
    """Null directions of one mode: boundary vectors (d, k) and L²-orthonormal profiles (k, d, cells, R+1)."""
    s: int
    side: str
    vectors: np.ndarray
    profiles: np.ndarray
    sigma: np.ndarray
    residual: float = 0.0

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def conjugate(self) -> "KernelEntry":
        return KernelEntry(-self.s, self.side, np.conj(self.vectors), np.conj(self.profiles), self.sigma, self.residual)


@dataclass
class KernelBasis:
    side: str
    grid: ProfileGrid
    entries: Dict[int, KernelEntry]
    formal: bool = False

    @property
    def resonant_modes(self) -> List[int]:
        return sorted(s for s, entry in self.entries.items() if entry.dimension > 0)

    @property
    def total_dimension(self) -> int:
        return sum(entry.dimension for entry in self.entries.values())


def _orthonormalize(profiles: np.ndarray, vectors: np.ndarray, grid: ProfileGrid):
    """Make profiles (k, d, cells, R+1) orthonormal in the piecewise-linear L² product."""
    k = profiles.shape[0]
    if k == 0:
        return profiles, vectors
    gram = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            gram[i, j] = pl_inner(profiles[j], profiles[i], grid.spacing).sum()
    lower = np.linalg.cholesky(gram)
    transform = np.linalg.inv(lower).conj().T
    return np.einsum("jdcr,ji->idcr", profiles, transform), vectors @ transform


def mode_kernel(
    p: ProblemData,
    s: int,
    side: Side = "direct",
    grid: Optional[ProfileGrid] = None,
    rtol: Optional[float] = None,
) -> KernelEntry:
    """Null space of the mode-s boundary system, propagated to profiles.

    A right singular vector counts when σ < rtol·σ_max; an empty entry is a valid result.
    """
    grid = ProfileGrid.for_problem(p, get_settings().MIN_SUBDIVISIONS) if grid is None else grid
    prop = build_propagator(p, s, grid, side)
    B0, B1 = boundary_matrices(p, side)
    K = _boundary_system(prop, B0, B1)
    vectors, sigma = null_space(K, rtol)
    residual = float(np.max(np.abs(K @ vectors)) / sigma[0]) if vectors.shape[1] and sigma[0] > 0 else 0.0
    profiles = np.einsum("abcr,bk->kacr", prop.fundamental_profiles, vectors)
    profiles, vectors = _orthonormalize(profiles, vectors, grid)
    if vectors.shape[1]:
        logger.debug("Mode %d has a %d-dimensional %s kernel", s, vectors.shape[1], side)
    return KernelEntry(s, side, vectors, profiles, sigma, residual)


def kernel_basis(p: ProblemData, S: int, side: Side = "direct", grid: Optional[ProfileGrid] = None) -> KernelBasis:
    """Kernel entries for |s| <= S; negative modes by conjugation."""
    grid = ProfileGrid.for_problem(p, get_settings().MIN_SUBDIVISIONS) if grid is None else grid
    formal = side == "adjoint" and is_formal_adjoint(p)
    if formal:
        logger.warning("Adjoint kernel on discontinuous speeds is formal", extra={"side": side})
    entries: Dict[int, KernelEntry] = {}
    for s in range(S + 1):
        entry = mode_kernel(p, s, side, grid)
        entries[s] = entry
        if s > 0:
            entries[-s] = entry.conjugate()
    return KernelBasis(side, grid, dict(sorted(entries.items())), formal)


def _mirror_solve(
    F: FourierField,
    solve: Callable[[int, np.ndarray], np.ndarray],
    resonance_test: Callable[[int], bool],
) -> FourierField:
    """Solve modes s >= 0, mirror the rest, aggregate resonant modes."""
    solved: Dict[int, np.ndarray] = {}
    resonant: List[ResonantMode] = []
    for s in range(F.S + 1):
        f_s = F.mode(s)
        if not np.any(f_s):
            if resonance_test(s):
                logger.warning(
                    f"Mode {s} is resonant but unforced; returning the zero profile", extra={"s": s}
                )
            continue
        try:
            solved[s] = solve(s, f_s)
        except ResonantMode as exc:
            resonant.append(exc)
    if resonant:
        raise ResonanceError(resonant)
    return from_modes(F.grid, F.n, F.S, solved)


def resonance_test(p: ProblemData, grid: ProfileGrid, side: Side) -> Callable[[int], bool]:
    B0, B1 = boundary_matrices(p, side)
    threshold = get_settings().RESONANCE_THRESHOLD

    def test(s: int) -> bool:
        K = _boundary_system(build_propagator(p, s, grid, side), B0, B1)
        return relative_sigma_min(K) < threshold

    return test


def coupled_solve_field(p: ProblemData, F: FourierField, side: Side = "direct") -> FourierField:
    """Mode-wise coupled solve of a whole field.

    Raises:
        ResonanceError: listing every resonant mode with nonzero forcing.
    """
    if side == "adjoint" and is_formal_adjoint(p):
        logger.warning("Adjoint solve on discontinuous speeds is formal", extra={"side": side})
    return _mirror_solve(
        F,
        lambda s, f_s: coupled_mode_solve(p, s, f_s, side),
        resonance_test(p, F.grid, side),
    )


def richardson_solve_field(
    p: ProblemData,
    F: FourierField,
    tol: Optional[float] = None,
    maxit: Optional[int] = None,
) -> Tuple[FourierField, Dict[int, RichardsonResult]]:
    diagonal_problem, _ = split_coupling(p)
    results: Dict[int, RichardsonResult] = {}

    def solve(s: int, f_s: np.ndarray) -> np.ndarray:
        results[s] = richardson_solve(p, s, f_s, tol, maxit)
        return results[s].profiles

    field_ = _mirror_solve(F, solve, resonance_test(diagonal_problem, F.grid, "direct"))
    return field_, results


@dataclass
class OrthogonalityDefect:
    """⟨f^s, ψ⟩ over (0,1) against one orthonormal adjoint kernel profile ψ.

    The pairing takes f^s piecewise linear and ψ the exact homogeneous adjoint
    solution through its stored nodes.
    """
    s: int
    index: int
    value: complex


def kernel_pairings(p: ProblemData, f_s: np.ndarray, entry: KernelEntry, grid: ProfileGrid) -> np.ndarray:
    """Exact ⟨f^s, ψ_i⟩ for every profile ψ_i of a kernel entry."""
    prop = build_propagator(p, entry.s, grid, entry.side)
    return np.array([prop.pair(f_s, psi) for psi in entry.profiles], dtype=complex)


def orthogonalize_forcing(p: ProblemData, F: FourierField, tol: Optional[float] = None) -> FourierField:
    """F with every resonant mode projected along the adjoint kernel until ⟨f^s, ψ_i⟩ = 0."""
    rtol = get_settings().NULLSPACE_RTOL if tol is None else tol
    grid = F.grid
    positive: Dict[int, np.ndarray] = {}
    for s in range(F.S + 1):
        f_s = F.mode(s)
        positive[s] = f_s
        if not np.any(f_s):
            continue
        adjoint = mode_kernel(p, s, "adjoint", grid, rtol)
        if not adjoint.dimension:
            continue
        gram = np.stack([kernel_pairings(p, psi, adjoint, grid) for psi in adjoint.profiles], axis=1)
        weights = np.linalg.solve(gram, kernel_pairings(p, f_s, adjoint, grid))
        positive[s] = f_s - np.einsum("i,idcr->dcr", weights, adjoint.profiles)
        logger.debug("Projected mode %d off a %d-dimensional adjoint kernel", s, adjoint.dimension)
    return from_modes(grid, F.n, F.S, positive)


def _solvability_functionals(prop: ModePropagator, B1: np.ndarray, left: np.ndarray, g: np.ndarray) -> np.ndarray:
    return left.conj().T @ (B1 @ prop.particular(g)[:, -1, -1])


def fredholm_solve(
    p: ProblemData,
    F: FourierField,
    tol: Optional[float] = None,
) -> Tuple[FourierField, List[OrthogonalityDefect]]:
    """Solve wherever possible; project resonant modes against the adjoint kernel.

    Nonresonant modes are solved directly. On a resonant mode the defects ⟨f^s, ψ_i⟩
    are recorded, f^s is corrected along the ψ_i until the discrete boundary system
    is consistent, and the least-squares solution with its direct-kernel component
    removed is returned. Defects are listed for s >= 0; s < 0 are their conjugates.
    """
    rtol = get_settings().NULLSPACE_RTOL if tol is None else tol
    grid = F.grid
    B0, B1 = boundary_matrices(p, "direct")
    solved: Dict[int, np.ndarray] = {}
    defects: List[OrthogonalityDefect] = []
    for s in range(F.S + 1):
        f_s = F.mode(s)
        prop = build_propagator(p, s, grid, "direct")
        K = _boundary_system(prop, B0, B1)
        if relative_sigma_min(K) >= rtol:
            if np.any(f_s):
                solved[s] = solve_mode_system(prop, B0, B1, sources(p, f_s))
            continue

        adjoint = mode_kernel(p, s, "adjoint", grid, rtol)
        direct = mode_kernel(p, s, "direct", grid, rtol)
        values = kernel_pairings(p, f_s, adjoint, grid)
        defects.extend(OrthogonalityDefect(s, i, complex(v)) for i, v in enumerate(values))
        logger.info(
            f"Mode {s} resonant: projecting against {adjoint.dimension} adjoint kernel profiles",
            extra={"s": s, "defects": [float(abs(v)) for v in values]},
        )

        left = left_null_space(K, rtol)
        corrected = f_s
        if adjoint.dimension and left.shape[1]:
            pairing = np.stack(
                [_solvability_functionals(prop, B1, left, sources(p, psi)) for psi in adjoint.profiles],
                axis=1,
            )
            target = _solvability_functionals(prop, B1, left, sources(p, f_s))
            weights = min_norm_solve(pairing, target, rtol)
            corrected = f_s - np.einsum("i,idcr->dcr", weights, adjoint.profiles)

        P = prop.particular(sources(p, corrected))
        U0 = min_norm_solve(K, -B1 @ P[:, -1, -1], rtol)
        u = np.einsum("abcr,b->acr", prop.fundamental_profiles, U0) + P
        for phi in direct.profiles:
            u = u - pl_inner(u, phi, grid.spacing).sum() * phi
        solved[s] = u
    return from_modes(grid, F.n, F.S, solved), defects


def augmented_solve_field(
    p: ProblemData,
    F: FourierField,
    generator_derivative: Callable[[int], np.ndarray],
    source_derivative: Callable[[np.ndarray], np.ndarray],
) -> Tuple[FourierField, FourierField]:
    """Solution and its exact directional derivative from a block-triangular system.

    generator_derivative(s) gives ∂M_c, shape (cells, n, n); source_derivative(f_s)
    gives ∂g, shape (n, cells, R+1). Returns (u, ∂u).
    """
    n = p.n
    B0, B1 = boundary_matrices(p, "direct")
    zero = np.zeros_like(B0)
    B0_aug = np.block([[B0, zero], [zero, B0]])
    B1_aug = np.block([[B1, zero], [zero, B1]])
    base: Dict[int, np.ndarray] = {}
    derivative: Dict[int, np.ndarray] = {}
    resonant: List[ResonantMode] = []
    for s in range(F.S + 1):
        f_s = F.mode(s)
        if not np.any(f_s):
            continue
        M = generators(p.a_values, p.b_values, s)
        cells = M.shape[0]
        augmented = np.zeros((cells, 2 * n, 2 * n), dtype=complex)
        augmented[:, :n, :n] = M
        augmented[:, n:, n:] = M
        augmented[:, n:, :n] = generator_derivative(s)
        prop = ModePropagator.from_generators(s, "direct", F.grid, augmented)
        g = np.concatenate([sources(p, f_s), source_derivative(f_s)], axis=0)
        try:
            profiles = solve_mode_system(prop, B0_aug, B1_aug, g)
        except ResonantMode as exc:
            resonant.append(exc)
            continue
        base[s], derivative[s] = profiles[:n], profiles[n:]
    if resonant:
        raise ResonanceError(resonant)
    return from_modes(F.grid, n, F.S, base), from_modes(F.grid, n, F.S, derivative)
