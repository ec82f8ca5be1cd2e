from pydantic import BaseModel, ConfigDict, Field
from typing import List, Literal, Optional


class ReportBase(BaseModel):
    """Common configuration; reports are emitted through io_utils.dump_report."""
    model_config = ConfigDict(populate_by_name=True)


class PairCondition(BaseModel):
    """Per-pair verdict of the speed/coupling factorization condition."""
    j: int
    k: int
    status: Literal["pass", "pass (degenerate)", "fail"]
    failing_cells: List[int] = []
    degenerate_cells: List[int] = []


class ConditionReport(ReportBase):
    schema_: Literal["hyperperiodic.conditions/1"] = Field(default="hyperperiodic.conditions/1", alias="schema")
    n: int
    m: int
    cells: int
    valid: bool

    ge_margin: float
    ge_holds: bool
    le_sum: float
    le_threshold: Optional[float] = None
    le_holds: Optional[bool] = None
    pairs: List[PairCondition]
    pair_condition_holds: bool
    kleinr_r0: float
    kleinr_r1: float
    kleinr_holds: bool
    condunif_value: float
    condunif_holds: bool
    suf2_value: Optional[float] = None
    suf2_holds: Optional[bool] = None
    sign_pattern_conventional: bool
    phase_monotone: List[Optional[bool]]
    dissipative: bool
    coef2_margins: List[float]
    coef2_holds: bool
    injectivity_sufficient: bool
    ne_integral: Optional[float] = None
    ne_holds: Optional[bool] = None
    warnings: List[str] = []


class ModeReport(BaseModel):
    s: int
    abs_det: float
    det_re: float
    det_im: float
    frob: float
    spectral: float
    resonant: bool
    kernel_dim: Optional[int] = None


class ScanReport(ReportBase):
    schema_: Literal["hyperperiodic.scan/1"] = Field(default="hyperperiodic.scan/1", alias="schema")
    s_max: int
    modes: List[ModeReport]
    min_abs_det: float
    argmin_s: int
    frobenius_bound: float
    frobenius_bound_checked: float
    frobenius_bound_holds: bool
    neumann_bound: Optional[float] = None
    bounds_respected: bool
    verdict: Literal["uniform", "resonant", "marginal"]
    resonant_modes: List[int]


class KernelModeReport(BaseModel):
    s: int
    dimension: int
    sigma: List[float]
    residual: float


class KernelReport(ReportBase):
    schema_: Literal["hyperperiodic.kernel/1"] = Field(default="hyperperiodic.kernel/1", alias="schema")
    side: Literal["direct", "adjoint"]
    s_max: int
    formal: bool
    modes: List[KernelModeReport]
    total_dimension: int
    resonant_modes: List[int]


class ModeIterations(BaseModel):
    s: int
    iterations: int
    ratio: float


class KernelDefect(BaseModel):
    s: int
    index: int
    defect_re: float
    defect_im: float
    abs_defect: float


class SolveSummary(ReportBase):
    schema_: Literal["hyperperiodic.solve/1"] = Field(default="hyperperiodic.solve/1", alias="schema")
    mode: Literal["direct", "richardson", "fredholm"]
    gamma: float
    truncation: int
    subdivisions: int
    residual_norm: Literal["per-mode L2 over (0,1), relative to the forcing w_norm"] = (
        "per-mode L2 over (0,1), relative to the forcing w_norm"
    )
    pde_residual: float
    boundary_residual: float
    interface_jump: float = 0.0
    w_norm_gamma: float
    w_norm_gamma_minus_1: float
    forcing_w_norm_gamma: float
    iterations: List[ModeIterations] = []
    defects: List[KernelDefect] = []
    resonant_modes: List[int] = []
    zero_forced_resonant: List[int] = []


class OracleSummary(ReportBase):
    schema_: Literal["hyperperiodic.oracle/1"] = Field(default="hyperperiodic.oracle/1", alias="schema")
    cells: int
    periods: int
    cfl: float
    dt: float
    steps_per_period: int
    deviation_history: List[float]
    final_deviation: float
    spectral_norm: float
    l2_mismatch: float
    relative_mismatch: float


class SensitivityCheck(BaseModel):
    direction: Literal["b", "a"]
    norm_gamma: float
    analytic_norm: float
    difference: float
    relative_difference: float


class VerificationReport(ReportBase):
    schema_: Literal["hyperperiodic.verification/1"] = Field(default="hyperperiodic.verification/1", alias="schema")
    gamma: float
    residual_norm: Literal["per-mode L2 over (0,1), relative to the forcing w_norm"] = (
        "per-mode L2 over (0,1), relative to the forcing w_norm"
    )
    pde_residual: float
    boundary_residual: float
    adjoint_pde_residual: float
    adjoint_boundary_residual: float
    interface_jump: float = 0.0
    adjoint_formal: bool
    duality_defect: Optional[float] = None
    duality_scale: Optional[float] = None
    sensitivities: List[SensitivityCheck]
