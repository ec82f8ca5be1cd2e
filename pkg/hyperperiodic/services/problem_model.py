"""Phase functions, structural conditions and the random-walk mapping."""
from dataclasses import dataclass
from typing import List, Optional
import logging

import numpy as np

from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import ProblemValidationError
from hyperperiodic.schemas.problem import (
    PiecewiseConstantFn,
    ProblemData,
    ProblemFile,
    RandomWalkData,
)
from hyperperiodic.schemas.reports import ConditionReport, PairCondition

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PhaseData:
    """α_j = ∫₀ˣ 1/a_j and β_j = ∫₀ˣ b_jj/a_j as continuous piecewise-linear functions.

    alpha and beta hold node values at the breakpoints, shape (n, N+1); the slopes
    are the exact per-cell values 1/a_j and b_jj/a_j, shape (n, N).
    """
    breakpoints: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_slope: np.ndarray
    beta_slope: np.ndarray

    @property
    def alpha_end(self) -> np.ndarray:
        return self.alpha[:, -1]

    @property
    def beta_end(self) -> np.ndarray:
        return self.beta[:, -1]

    def evaluate(self, x: np.ndarray) -> tuple:
        """(α(x), β(x)) at arbitrary points, shape (n, len(x)) each."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        alpha = np.stack([np.interp(x, self.breakpoints, row) for row in self.alpha])
        beta = np.stack([np.interp(x, self.breakpoints, row) for row in self.beta])
        return alpha, beta


def compute_phases(p: ProblemData) -> PhaseData:
    a = p.a_values
    if np.any(a == 0.0):
        j, c = np.argwhere(a == 0.0)[0]
        raise ProblemValidationError(
            f"speed a_{j + 1} vanishes on cell {c}", {"component": int(j) + 1, "cell": int(c)}
        )
    inverse = 1.0 / a
    damping = np.einsum("jjc->jc", p.b_values) * inverse
    widths = p.widths
    zero = np.zeros((p.n, 1))
    alpha = np.concatenate([zero, np.cumsum(inverse * widths, axis=1)], axis=1)
    beta = np.concatenate([zero, np.cumsum(damping * widths, axis=1)], axis=1)
    return PhaseData(p.partition.nodes, alpha, beta, inverse, damping)


def _pair_conditions(p: ProblemData, tolerance: float) -> List[PairCondition]:
    a, b = p.a_values, p.b_values
    pairs = []
    for j in range(p.n):
        for k in range(p.n):
            if j == k:
                continue
            equal = np.abs(a[j] - a[k]) <= tolerance
            coupled = b[j, k] != 0.0
            failing = np.flatnonzero(equal & coupled).tolist()
            degenerate = np.flatnonzero(equal & ~coupled).tolist()
            if failing:
                status = "fail"
            elif degenerate:
                status = "pass (degenerate)"
            else:
                status = "pass"
            pairs.append(PairCondition(
                j=j + 1, k=k + 1, status=status,
                failing_cells=failing, degenerate_cells=degenerate,
            ))
    return pairs


def condunif_value(p: ProblemData, phases: PhaseData) -> float:
    """Σ_{j,k>m} Σ_{l≤m} e^{2(β_j(1)-β_l(1))} |r¹_jl r⁰_lk|²."""
    m = p.m
    beta = phases.beta_end
    growth = np.exp(2.0 * (beta[m:, None] - beta[None, :m]))
    return float(np.einsum("jl,jl,lk->", growth, p.r1_matrix ** 2, p.r0_matrix ** 2))


def coef2_margins(p: ProblemData) -> np.ndarray:
    """ess inf over x of ±b_jj/a_j - Σ_{k≠j} (|b_jk/a_j| + |b_jk/a_k|), per component j."""
    sign = np.where(np.arange(p.n) < p.m, 1.0, -1.0)
    a = np.abs(p.a_values)
    coupling = np.abs(p.b_values)
    off = coupling / a[:, None, :] + coupling / a[None, :, :]
    off[np.arange(p.n), np.arange(p.n)] = 0.0
    diagonal = sign[:, None] * np.einsum("jjc->jc", p.b_values) / p.a_values
    return (diagonal - off.sum(axis=1)).min(axis=1)


def ne_integral(data: RandomWalkData) -> float:
    """∫₀¹ (μ⁺/a⁺ + μ⁻/a⁻) dx."""
    fns = data.functions()
    widths = fns["a_plus"].partition.widths
    density = fns["mu_plus"].array / fns["a_plus"].array + fns["mu_minus"].array / fns["a_minus"].array
    return float(np.dot(density, widths))


def validate(p: ProblemData, phases: Optional[PhaseData] = None) -> ConditionReport:
    """Evaluate every structural and sufficient condition; failures are verdicts."""
    settings = get_settings()
    phases = compute_phases(p) if phases is None else phases
    a, b = p.a_values, p.b_values
    r0, r1 = p.r0_matrix, p.r1_matrix
    warnings = []

    ge_margin = float(np.min(np.abs(a)))
    le_sum = float(np.abs(np.einsum("jjc->jc", b)).max(axis=1).sum() + np.abs(r0).sum() + np.abs(r1).sum())
    le_threshold = settings.LE_THRESHOLD

    pairs = _pair_conditions(p, settings.SIGN_TOLERANCE)

    kleinr_r0 = float(np.sum(r0 ** 2))
    kleinr_r1 = float(np.sum(r1 ** 2))
    condunif = condunif_value(p, phases)

    suf2 = None
    if p.n == 2 and p.m == 1:
        suf2 = float(abs(r1[0, 0] * r0[0, 0]) * np.exp(phases.beta_end[1] - phases.beta_end[0]))

    conventional = bool(np.all(a[: p.m] > 0) and np.all(a[p.m:] < 0))
    if not conventional:
        message = "speeds do not follow the conventional sign pattern (a_j > 0 for j <= m, a_j < 0 for j > m)"
        warnings.append(message)
        logger.warning(message, extra={"n": p.n, "m": p.m})
    monotone = [True if np.all(row > 0) or np.all(row < 0) else None for row in a]

    margins = coef2_margins(p)
    coef2_holds = bool(np.all(margins > 0))
    kleinr_holds = kleinr_r0 <= 1.0 and kleinr_r1 <= 1.0

    ne_value = ne_integral(p.origin) if p.origin is not None else None

    report = ConditionReport(
        n=p.n, m=p.m, cells=p.cells,
        valid=ge_margin > 0,
        ge_margin=ge_margin,
        ge_holds=ge_margin > 0,
        le_sum=le_sum,
        le_threshold=le_threshold,
        le_holds=None if le_threshold is None else le_sum <= le_threshold,
        pairs=pairs,
        pair_condition_holds=all(pair.status != "fail" for pair in pairs),
        kleinr_r0=kleinr_r0,
        kleinr_r1=kleinr_r1,
        kleinr_holds=kleinr_holds,
        condunif_value=condunif,
        condunif_holds=condunif < 1.0,
        suf2_value=suf2,
        suf2_holds=None if suf2 is None else suf2 < 1.0,
        sign_pattern_conventional=conventional,
        phase_monotone=monotone,
        dissipative=bool(np.all(np.einsum("jjc->jc", b) > 0)),
        coef2_margins=[float(v) for v in margins],
        coef2_holds=coef2_holds,
        injectivity_sufficient=kleinr_holds and coef2_holds,
        ne_integral=ne_value,
        ne_holds=None if ne_value is None else ne_value > 0,
        warnings=warnings,
    )
    logger.debug("Validated problem: condunif=%.6g, le_sum=%.6g", condunif, le_sum)
    return report


def from_random_walk(
    a_plus: PiecewiseConstantFn,
    a_minus: PiecewiseConstantFn,
    mu_plus: PiecewiseConstantFn,
    mu_minus: PiecewiseConstantFn,
) -> ProblemData:
    """Map a correlated random walk onto the 2×2 reflection system.

    Interface terms of ∂ₓa± at breakpoints are dropped; the mapping holds
    almost everywhere.
    """
    partition = a_plus.partition
    for fn in (a_minus, mu_plus, mu_minus):
        if fn.partition.breakpoints != partition.breakpoints:
            raise ProblemValidationError("random-walk coefficients must share one partition")
    for name, fn in (("a_plus", a_plus), ("a_minus", a_minus)):
        if np.any(fn.array <= 0):
            raise ProblemValidationError(
                f"{name} must be positive on every cell", {"field": name, "values": fn.values}
            )
    ap, am, mp, mm = a_plus.array, a_minus.array, mu_plus.array, mu_minus.array
    origin = RandomWalkData(
        breakpoints=partition.breakpoints,
        a_plus=a_plus.values, a_minus=a_minus.values,
        mu_plus=mu_plus.values, mu_minus=mu_minus.values,
    )
    return ProblemData(
        n=2, m=1, partition=partition,
        a=[ap.tolist(), (-am).tolist()],
        b=[[mp.tolist(), (-mm).tolist()], [(-mp).tolist(), mm.tolist()]],
        r0=[[float(am[0] / ap[0])]],
        r1=[[float(ap[-1] / am[-1])]],
        origin=origin,
    )


def build_problem(document: ProblemFile) -> ProblemData:
    """ProblemData from a parsed problem file of either form."""
    if document.random_walk is not None:
        return from_random_walk(**document.random_walk.functions())
    return ProblemData(
        n=document.n, m=document.m,
        partition={"breakpoints": document.breakpoints},
        a=document.a, b=document.b, r0=document.r0, r1=document.r1,
    )
