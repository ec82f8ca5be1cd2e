"""Mode-by-mode solution of the decoupled system a_j u_j' + (is + b_jj) u_j = f_j.

Each component is integrated by variation of constants with exact oscillatory
subcell integrals; the reflection conditions reduce to (I - R_s) u_{>m}(0) = rhs.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple
import logging

import numpy as np
from scipy.signal import lfilter

from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import ResonanceError, ResonantMode
from hyperperiodic.schemas.problem import ProblemData
from hyperperiodic.services.fourier import FourierField, ProfileGrid, from_modes
from hyperperiodic.services.problem_model import PhaseData

logger = logging.getLogger(__name__)

SERIES_TERMS = 10


def assemble_R(phases: PhaseData, r0: np.ndarray, r1: np.ndarray, s) -> np.ndarray:
    """R_s with entries Σ_l e^{is(α_j(1)-α_l(1)) + β_j(1)-β_l(1)} r¹_jl r⁰_lk, j,k > m.

    `s` may be an integer or an array of integers; arrays give a stack of matrices.
    """
    r0 = np.asarray(r0, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    m = r0.shape[0]
    alpha, beta = phases.alpha_end, phases.beta_end
    d_alpha = alpha[m:, None] - alpha[None, :m]
    d_beta = beta[m:, None] - beta[None, :m]
    s_arr = np.asarray(s, dtype=float)
    exponent = 1j * s_arr[..., None, None] * d_alpha + d_beta
    return np.einsum("...jl,jl,lk->...jk", np.exp(exponent), r1, r0)


def small_denominator(R_s: np.ndarray) -> complex:
    """det(I - R_s), LU with partial pivoting; accepts stacked matrices."""
    R_s = np.asarray(R_s)
    identity = np.eye(R_s.shape[-1])
    value = np.linalg.det(identity - R_s)
    return complex(value) if np.ndim(value) == 0 else value


def _phi_series(w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    phi1 = np.zeros_like(w)
    phi2 = np.zeros_like(w)
    term = np.ones_like(w)
    factorial = 1.0
    for k in range(SERIES_TERMS):
        phi1 = phi1 + term / (factorial * (k + 1))
        phi2 = phi2 + term / (factorial * (k + 1) * (k + 2))
        factorial *= k + 1
        term = term * w
    return phi1, phi2


def cell_integral(z, h, p0, p1, switch: Optional[float] = None):
    """∫₀ʰ e^{zy}(p0 + p1 y) dy, exact; broadcasts over all arguments.

    Closed form through expm1 for |zh| >= switch, Taylor series in zh below.
    """
    switch = get_settings().SERIES_SWITCH if switch is None else switch
    z, h, p0, p1 = np.broadcast_arrays(
        np.asarray(z, dtype=complex), np.asarray(h, dtype=float),
        np.asarray(p0, dtype=complex), np.asarray(p1, dtype=complex),
    )
    w = z * h
    small = np.abs(w) < switch
    phi1 = np.empty_like(w)
    phi2 = np.empty_like(w)
    if np.any(small):
        phi1[small], phi2[small] = _phi_series(w[small])
    big = ~small
    if np.any(big):
        em1 = np.expm1(w[big])
        phi1[big] = em1 / w[big]
        phi2[big] = (em1 - w[big]) / w[big] ** 2
    # ∫₀¹ τ e^{wτ} dτ = φ₁ - φ₂
    result = p0 * h * phi1 + p1 * h ** 2 * (phi1 - phi2)
    return result[()] if result.ndim == 0 else result


@dataclass(frozen=True, eq=False)
class ModeDiagonalSystem:
    """Decoupled mode data: rates λ_j = (is + b_jj)/a_j per cell and sources f_j/a_j."""
    s: int
    grid: ProfileGrid
    rate: np.ndarray
    source: np.ndarray
    phases: PhaseData

    @classmethod
    def build(cls, p: ProblemData, phases: PhaseData, s: int, f_s: np.ndarray) -> "ModeDiagonalSystem":
        f_s = np.asarray(f_s, dtype=complex)
        grid = ProfileGrid.for_problem(p, f_s.shape[-1] - 1)
        a = p.a_values
        rate = (1j * s + np.einsum("jjc->jc", p.b_values)) / a
        return cls(s, grid, rate, f_s / a[:, :, None], phases)

    def homogeneous(self) -> np.ndarray:
        """e^{-isα_j(x) - β_j(x)} at every profile node, shape (n, cells, R+1)."""
        steps = np.arange(self.grid.subdivisions + 1) * self.grid.spacing[:, None]
        start = 1j * self.s * self.phases.alpha[:, :-1] + self.phases.beta[:, :-1]
        return np.exp(-start[:, :, None] - self.rate[:, :, None] * steps[None, :, :])

    def particular(self) -> np.ndarray:
        """Solution with zero value at x = 0, integrated subcell by subcell."""
        n = self.rate.shape[0]
        h = self.grid.spacing
        g = self.source
        slope = (g[..., 1:] - g[..., :-1]) / h[None, :, None]
        increments = cell_integral(-self.rate[:, :, None], h[None, :, None], g[..., 1:], -slope)
        decay = np.exp(-self.rate * h[None, :])
        P = np.zeros_like(g)
        for j in range(n):
            start = 0.0j
            for c in range(self.grid.cells):
                q = decay[j, c]
                P[j, c, 0] = start
                P[j, c, 1:], _ = lfilter([1.0], [1.0, -q], increments[j, c], zi=[q * start])
                start = P[j, c, -1]
        return P


@dataclass
class ModeSolveArtifacts:
    """Per-mode boundary data; R_s and the solved boundary values stand in for d^s_jk."""
    s: int
    R_s: np.ndarray
    det: complex
    boundary_values: np.ndarray
    inverse_norm: float

    @property
    def abs_det(self) -> float:
        return float(abs(self.det))

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "abs_det": self.abs_det,
            "det_re": float(self.det.real),
            "det_im": float(self.det.imag),
            "frob": float(np.linalg.norm(self.R_s)),
            "inverse_norm": self.inverse_norm,
            "boundary_values": [[float(v.real), float(v.imag)] for v in self.boundary_values],
        }


def diag_mode_solve(
    p: ProblemData,
    phases: PhaseData,
    s: int,
    f_s: np.ndarray,
) -> Tuple[np.ndarray, ModeSolveArtifacts]:
    """Solve mode s of the decoupled system under the reflection conditions.

    Args:
        p: problem data (only a, b_jj, r⁰, r¹ enter)
        phases: phase functions of p
        s: mode index
        f_s: forcing profiles, shape (n, cells, R+1)

    Returns:
        (u^s profiles, artifacts)

    Raises:
        ResonantMode: when |det(I - R_s)| is below the resonance threshold.
    """
    threshold = get_settings().RESONANCE_THRESHOLD
    m = p.m
    R_s = assemble_R(phases, p.r0_matrix, p.r1_matrix, s)
    det = small_denominator(R_s)
    if abs(det) < threshold:
        logger.debug("Mode %d resonant in the decoupled system", s, extra={"s": s, "abs_det": abs(det)})
        raise ResonantMode(s, abs(det))

    system = ModeDiagonalSystem.build(p, phases, s, f_s)
    H = system.homogeneous()
    P = system.particular()
    H_end, P_end = H[:, -1, -1], P[:, -1, -1]

    rhs = (p.r1_matrix @ P_end[:m] - P_end[m:]) / H_end[m:]
    lhs = np.eye(p.n - m) - R_s
    outgoing = np.linalg.solve(lhs, rhs)
    u0 = np.concatenate([p.r0_matrix @ outgoing, outgoing])
    profiles = H * u0[:, None, None] + P

    artifacts = ModeSolveArtifacts(
        s=s, R_s=R_s, det=det, boundary_values=u0,
        inverse_norm=float(np.linalg.norm(np.linalg.inv(lhs), 2)),
    )
    return profiles, artifacts


def apply_Ainv(p: ProblemData, phases: PhaseData, F: FourierField) -> FourierField:
    """Mode-wise inverse of the decoupled operator; modes s < 0 by conjugate mirroring.

    Modes with identically zero forcing return zero without a resonance test.

    Raises:
        ResonanceError: listing every resonant mode with nonzero forcing.
    """
    threshold = get_settings().RESONANCE_THRESHOLD
    solved: Dict[int, np.ndarray] = {}
    resonant: List[ResonantMode] = []
    for s in range(F.S + 1):
        f_s = F.mode(s)
        if not np.any(f_s):
            det = small_denominator(assemble_R(phases, p.r0_matrix, p.r1_matrix, s))
            if abs(det) < threshold:
                logger.warning(
                    f"Mode {s} is resonant but unforced; returning the zero profile",
                    extra={"s": s, "abs_det": abs(det)},
                )
            continue
        try:
            solved[s], artifacts = diag_mode_solve(p, phases, s, f_s)
            logger.debug("Solved decoupled mode %d", s, extra=artifacts.to_dict())
        except ResonantMode as exc:
            resonant.append(exc)
    if resonant:
        raise ResonanceError(resonant)
    return from_modes(F.grid, F.n, F.S, solved)
