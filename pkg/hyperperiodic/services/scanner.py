"""Sweeps of s ↦ det(I - R_s) with the static Frobenius and Neumann bounds."""
from typing import Optional
import logging

import numpy as np

from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import ProblemValidationError
from hyperperiodic.schemas.problem import ProblemData
from hyperperiodic.schemas.reports import ModeReport, ScanReport
from hyperperiodic.services.diagonal import assemble_R, small_denominator
from hyperperiodic.services.problem_model import PhaseData, compute_phases, condunif_value

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-12
NEUMANN_SLACK = 1e-10


def frobenius_bound(p: ProblemData, phases: Optional[PhaseData] = None) -> float:
    """Left-hand side of the uniform condition; bounds ‖R_s‖_F² for every s when m = 1.

    For m > 1 only m times this value is a bound, so scans report both comparisons.
    """
    phases = compute_phases(p) if phases is None else phases
    return condunif_value(p, phases)


def scan(p: ProblemData, S_max: int, phases: Optional[PhaseData] = None) -> ScanReport:
    if S_max < 1:
        raise ProblemValidationError(f"S_max must be at least 1, got {S_max}")
    settings = get_settings()
    phases = compute_phases(p) if phases is None else phases

    s_values = np.arange(-S_max, S_max + 1)
    R = assemble_R(phases, p.r0_matrix, p.r1_matrix, s_values)
    det = small_denominator(R)
    abs_det = np.abs(det)
    frob = np.linalg.norm(R, axis=(-2, -1))
    spectral = np.linalg.norm(R, ord=2, axis=(-2, -1))
    resonant = abs_det < settings.RESONANCE_THRESHOLD

    bound = frobenius_bound(p, phases)
    checked = bound * p.m
    literal = bool(np.all(frob ** 2 <= bound + BOUND_SLACK))
    respected = bool(np.all(frob ** 2 <= checked + BOUND_SLACK))
    neumann = None
    if checked < 1.0:
        neumann = float((1.0 - np.sqrt(checked)) ** (p.n - p.m))
        respected = respected and float(abs_det.min()) >= neumann - NEUMANN_SLACK

    index = int(np.argmin(abs_det))
    minimum = float(abs_det[index])
    resonant_modes = [int(s) for s in s_values[resonant]]
    if resonant_modes:
        verdict = "resonant"
    elif minimum <= settings.MARGINAL_THRESHOLD:
        verdict = "marginal"
    else:
        verdict = "uniform"

    modes = [
        ModeReport(
            s=int(s), abs_det=float(abs_det[i]), det_re=float(det[i].real), det_im=float(det[i].imag),
            frob=float(frob[i]), spectral=float(spectral[i]), resonant=bool(resonant[i]),
        )
        for i, s in enumerate(s_values)
    ]
    logger.info(
        f"Scanned |s| <= {S_max}: verdict {verdict}, min |det| = {minimum:.3e} at s = {int(s_values[index])}",
        extra={"s_max": S_max, "resonant_modes": resonant_modes},
    )
    return ScanReport(
        s_max=S_max,
        modes=modes,
        min_abs_det=minimum,
        argmin_s=int(s_values[index]),
        frobenius_bound=bound,
        frobenius_bound_checked=checked,
        frobenius_bound_holds=literal,
        neumann_bound=neumann,
        bounds_respected=respected,
        verdict=verdict,
        resonant_modes=resonant_modes,
    )
