"""Exception hierarchy; every error carries the CLI exit code it maps to."""
from typing import Any, Dict, List, Optional, Sequence

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_RESONANCE = 3
EXIT_PARSE = 4


class HyperperiodicError(Exception):
    """Base class for all library errors."""
    exit_code: int = EXIT_VALIDATION
    error_code: str = "error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ProblemValidationError(HyperperiodicError):
    error_code = "validation_error"


class ResonantMode(HyperperiodicError):
    """A single mode whose boundary system is numerically singular."""
    exit_code = EXIT_RESONANCE
    error_code = "resonant_mode"

    def __init__(self, s: int, magnitude: float, measure: str = "abs_det"):
        super().__init__(
            f"mode s={s} is resonant ({measure}={magnitude:.3e})",
            {"s": s, measure: magnitude},
        )
        self.s = s
        self.magnitude = magnitude
        self.measure = measure


class ResonanceError(HyperperiodicError):
    """Aggregate of resonant modes met during a field solve."""
    exit_code = EXIT_RESONANCE
    error_code = "resonance"

    def __init__(self, modes: Sequence[ResonantMode]):
        self.modes: List[ResonantMode] = list(modes)
        indices = sorted({mode.s for mode in self.modes})
        super().__init__(
            f"resonant modes {indices}; rerun with --mode fredholm",
            {"resonant_modes": indices, "suggestion": "--mode fredholm"},
        )
        self.indices = indices


class NonContractive(HyperperiodicError):
    error_code = "non_contractive"

    def __init__(self, ratio: float, iterations: int):
        super().__init__(
            f"Richardson iteration does not contract (ratio={ratio:.3e} after {iterations} iterations)",
            {"ratio": ratio, "iterations": iterations},
        )
        self.ratio = ratio
        self.iterations = iterations


class AliasingError(HyperperiodicError):
    error_code = "aliasing"


class CFLViolation(HyperperiodicError):
    error_code = "cfl_violation"


class ExpmOverflowError(HyperperiodicError):
    error_code = "expm_overflow"


class ParseError(HyperperiodicError):
    """Unreadable input file, with field-level diagnostics."""
    exit_code = EXIT_PARSE
    error_code = "parse_error"

    def __init__(self, message: str, errors: Optional[List[Dict[str, str]]] = None):
        super().__init__(message, {"errors": errors or []})
        self.errors = errors or []
