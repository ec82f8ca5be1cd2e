"""Truncated temporal Fourier families of piecewise-linear x-profiles.

Stored coefficients follow u^s(x) = (1/2π)∫₀^{2π} u(x,t) e^{-ist} dt, so a field is
recovered as u(x,t) = Σ_s u^s(x) e^{ist}. Profiles live on a ProfileGrid: every cell
of the partition carries its own R+1 equispaced nodes, and the nodes at an interior
breakpoint are stored once per neighbouring cell.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Sequence
import logging
import math

import numpy as np

from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import AliasingError, ProblemValidationError
from hyperperiodic.schemas.forcing import ForcingFile
from hyperperiodic.schemas.problem import ProblemData
from hyperperiodic.utils.quadrature import pl_norm_sq

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class ProfileGrid:
    """Partition breakpoints plus a uniform count of subintervals per cell."""
    breakpoints: np.ndarray
    subdivisions: int

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", np.asarray(self.breakpoints, dtype=float))
        if self.subdivisions < 1:
            raise ProblemValidationError(f"subdivisions must be positive, got {self.subdivisions}")

    @classmethod
    def for_problem(cls, p: ProblemData, subdivisions: int) -> "ProfileGrid":
        return cls(p.partition.nodes, subdivisions)

    @property
    def cells(self) -> int:
        return self.breakpoints.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def spacing(self) -> np.ndarray:
        """Subnode spacing per cell."""
        return self.widths / self.subdivisions

    @property
    def x(self) -> np.ndarray:
        """Node positions, shape (cells, R+1)."""
        steps = np.arange(self.subdivisions + 1)
        x = self.breakpoints[:-1, None] + self.spacing[:, None] * steps[None, :]
        x[:, -1] = self.breakpoints[1:]
        return x

    @property
    def global_size(self) -> int:
        return self.cells * self.subdivisions + 1

    @property
    def global_x(self) -> np.ndarray:
        return self.collapse(self.x)

    def matches(self, other: "ProfileGrid") -> bool:
        return (
            self.subdivisions == other.subdivisions
            and self.breakpoints.shape == other.breakpoints.shape
            and bool(np.all(self.breakpoints == other.breakpoints))
        )

    def expand(self, values: np.ndarray) -> np.ndarray:
        """Global node values (..., N·R+1) to per-cell layout (..., N, R+1)."""
        values = np.asarray(values)
        if values.shape[-1] != self.global_size:
            raise ProblemValidationError(
                f"expected {self.global_size} node values, got {values.shape[-1]}"
            )
        R = self.subdivisions
        index = np.arange(self.cells)[:, None] * R + np.arange(R + 1)[None, :]
        return values[..., index]

    def collapse(self, values: np.ndarray) -> np.ndarray:
        """Per-cell layout to global nodes; interior breakpoints take the right cell's value."""
        values = np.asarray(values)
        head = values[..., :, :-1].reshape(values.shape[:-2] + (self.cells * self.subdivisions,))
        return np.concatenate([head, values[..., -1, -1:]], axis=-1)

    def refined(self, factor: int) -> "ProfileGrid":
        return ProfileGrid(self.breakpoints, self.subdivisions * factor)

    def interpolate(self, values: np.ndarray, factor: int) -> np.ndarray:
        """Exact piecewise-linear resampling of per-cell values onto `refined(factor)`."""
        if factor == 1:
            return np.array(values, copy=True)
        R = self.subdivisions
        position = np.arange(R * factor + 1) / factor
        lower = np.minimum(np.floor(position).astype(int), R - 1)
        weight = position - lower
        return values[..., lower] * (1.0 - weight) + values[..., lower + 1] * weight


@dataclass(frozen=True, eq=False)
class FourierField:
    """Modes s = -S..S of an n-component field, shape (2S+1, n, cells, R+1)."""
    grid: ProfileGrid
    modes: np.ndarray

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=complex)
        if modes.ndim != 4 or modes.shape[0] % 2 != 1:
            raise ProblemValidationError(f"malformed mode array of shape {modes.shape}")
        if modes.shape[2:] != (self.grid.cells, self.grid.subdivisions + 1):
            raise ProblemValidationError(
                f"mode profiles of shape {modes.shape[2:]} do not fit the grid "
                f"({self.grid.cells} cells, {self.grid.subdivisions} subdivisions)"
            )
        object.__setattr__(self, "modes", modes)

    @property
    def S(self) -> int:
        return (self.modes.shape[0] - 1) // 2

    @property
    def n(self) -> int:
        return self.modes.shape[1]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.S, self.S + 1)

    def mode(self, s: int) -> np.ndarray:
        if abs(s) > self.S:
            raise IndexError(f"mode {s} outside truncation {self.S}")
        return self.modes[s + self.S]

    def with_modes(self, modes: np.ndarray) -> "FourierField":
        return FourierField(self.grid, modes)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.modes))) if self.modes.size else 0.0

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.modes - np.conj(self.modes[::-1]))))

    def is_hermitian(self, tol: float = HERMITIAN_TOLERANCE) -> bool:
        return self.hermitian_defect() <= tol * max(1.0, self.max_abs())

    def _check_compatible(self, other: "FourierField"):
        if not self.grid.matches(other.grid) or self.modes.shape != other.modes.shape:
            raise ProblemValidationError("fields live on different grids or truncations")

    def __add__(self, other: "FourierField") -> "FourierField":
        self._check_compatible(other)
        return self.with_modes(self.modes + other.modes)

    def __sub__(self, other: "FourierField") -> "FourierField":
        self._check_compatible(other)
        return self.with_modes(self.modes - other.modes)

    def __mul__(self, factor: float) -> "FourierField":
        return self.with_modes(self.modes * factor)

    __rmul__ = __mul__

    def __neg__(self) -> "FourierField":
        return self.with_modes(-self.modes)


def zeros(grid: ProfileGrid, n: int, S: int) -> FourierField:
    return FourierField(grid, np.zeros((2 * S + 1, n, grid.cells, grid.subdivisions + 1), dtype=complex))


def from_modes(grid: ProfileGrid, n: int, S: int, positive: Dict[int, np.ndarray]) -> FourierField:
    """Hermitian family from the profiles of modes s >= 0; missing modes are zero.

    The s = 0 profile keeps only its real part and every s > 0 profile is mirrored
    to -s by conjugation.
    """
    field = zeros(grid, n, S).modes
    for s, profile in positive.items():
        if s < 0 or s > S:
            raise ProblemValidationError(f"mode index {s} outside 0..{S}")
        profile = np.broadcast_to(np.asarray(profile, dtype=complex), field.shape[1:])
        if s == 0:
            field[S] = profile.real
        else:
            field[S + s] = profile
            field[S - s] = np.conj(profile)
    return FourierField(grid, field)


def analyze(samples: np.ndarray, S: int, grid: ProfileGrid) -> FourierField:
    """DFT in time of a real field sampled at t_k = 2πk/T, k = 0..T-1.

    Args:
        samples: shape (T, n, cells, R+1) or (T, n, N·R+1)
        S: truncation order
        grid: node layout of the samples

    Returns:
        FourierField with u^s for |s| <= S, symmetric by construction.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 3:
        samples = grid.expand(samples)
    T = samples.shape[0]
    if T < 2 * S + 1:
        raise AliasingError(
            f"{T} time samples cannot resolve truncation S={S}; need at least {2 * S + 1}",
            {"samples": T, "truncation": S},
        )
    coefficients = np.fft.fft(samples, axis=0) / T
    positive = {s: coefficients[s] for s in range(S + 1)}
    logger.debug("Analyzed %d time samples into %d modes", T, 2 * S + 1)
    return from_modes(grid, samples.shape[1], S, positive)


def synthesize(F: FourierField, times: Sequence[float]) -> np.ndarray:
    """Real field Σ_s u^s e^{ist} at the given times, shape (T, n, cells, R+1)."""
    if not F.is_hermitian():
        raise ProblemValidationError(
            "cannot synthesize a real field from non-Hermitian modes",
            {"hermitian_defect": F.hermitian_defect()},
        )
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phase = np.exp(1j * np.outer(times, F.indices))
    return np.einsum("ts,sjcr->tjcr", phase, F.modes).real


def period_times(T: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(T) / T


def mode_norms_sq(F: FourierField) -> np.ndarray:
    """∫₀¹ ‖u^s(x)‖² dx per mode."""
    return pl_norm_sq(F.modes, F.grid.spacing).sum(axis=1)


def w_norm(F: FourierField, gamma: float) -> float:
    """sqrt(4π² Σ_s (1+s²)^γ ∫‖u^s‖² dx)."""
    if gamma < 0:
        raise ProblemValidationError(f"gamma must be nonnegative, got {gamma}")
    weights = (1.0 + F.indices.astype(float) ** 2) ** gamma
    return float(math.sqrt(4.0 * math.pi ** 2 * float(np.dot(weights, mode_norms_sq(F)))))


def refine(F: FourierField, factor: int) -> FourierField:
    if factor < 1:
        raise ProblemValidationError(f"refinement factor must be positive, got {factor}")
    return FourierField(F.grid.refined(factor), F.grid.interpolate(F.modes, factor))


def subdivisions_for(p: ProblemData, S: int, minimum: Optional[int] = None) -> int:
    """Subnodes per cell resolving the fastest mode oscillation up to |s| = S.

    R >= density · max_c h_c max_j |iS + b_jj|/|a_j| / π, never below the
    configured minimum.
    """
    settings = get_settings()
    floor = settings.MIN_SUBDIVISIONS if minimum is None else minimum
    b_diag = np.abs(np.einsum("jjc->jc", p.b_values))
    rate = np.hypot(float(S), b_diag) / np.abs(p.a_values)
    needed = settings.SUBDIVISION_DENSITY * float(np.max(rate.max(axis=0) * p.widths)) / math.pi
    return max(floor, int(math.ceil(needed)))


def fit_grid(F: FourierField, subdivisions: int) -> FourierField:
    """Refine F onto the smallest multiple of its grid with at least `subdivisions` subnodes."""
    factor = max(1, int(math.ceil(subdivisions / F.grid.subdivisions)))
    return refine(F, factor)


def build_forcing(document: ForcingFile, p: ProblemData) -> FourierField:
    """FourierField from a parsed forcing file on the problem's partition."""
    grid = ProfileGrid.for_problem(p, document.subdivisions)
    S = document.truncation
    if document.samples is not None:
        samples = np.asarray(document.samples.values, dtype=float)
        if samples.shape[1:] != (p.n, grid.global_size):
            raise ProblemValidationError(
                f"samples must have shape T x {p.n} x {grid.global_size}, got {samples.shape}"
            )
        return analyze(samples, S, grid)

    positive: Dict[int, np.ndarray] = {}
    for block in document.modes:
        if block.component > p.n:
            raise ProblemValidationError(
                f"component {block.component} exceeds n={p.n}", {"s": block.s}
            )
        profile = positive.setdefault(
            block.s, np.zeros((p.n, grid.cells, grid.subdivisions + 1), dtype=complex)
        )
        if block.constant is not None:
            profile[block.component - 1] += complex(*block.constant)
        else:
            values = np.array([complex(re, im) for re, im in block.values])
            profile[block.component - 1] += grid.expand(values)
    return from_modes(grid, p.n, S, positive)
