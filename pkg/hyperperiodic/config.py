from functools import lru_cache
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional
from dotenv import load_dotenv
import logging
import os

logger = logging.getLogger(__name__)

if os.path.exists(".env"):
    load_dotenv(".env", override=True)
    logger.debug("Loaded .env configuration")
else:
    load_dotenv()

LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


class Settings(BaseSettings):
    """Numerical thresholds and command defaults."""
    model_config = SettingsConfigDict(env_prefix="HYPERPERIODIC_", extra="ignore")

    PROJECT_NAME: str = "hyperperiodic"

    # Resonance and null-space detection
    RESONANCE_THRESHOLD: float = 1e-10
    NULLSPACE_RTOL: float = 1e-10
    MARGINAL_THRESHOLD: float = 1e-4

    # Exact cell integrals
    SERIES_SWITCH: float = 1e-3
    EXPM_NORM_LIMIT: float = 1e3

    # Condition reporting
    LE_THRESHOLD: Optional[float] = None
    SIGN_TOLERANCE: float = 1e-14

    # Profile grids
    MIN_SUBDIVISIONS: int = 8
    SUBDIVISION_DENSITY: float = 1.0

    # Richardson iteration
    RICHARDSON_TOL: float = 1e-12
    RICHARDSON_MAXIT: int = 200

    # Command defaults
    DEFAULT_SMAX: int = 256
    SYNTHESIS_TIMES: int = 64
    ORACLE_CELLS: int = 512
    ORACLE_SAMPLES: int = 32
    ORACLE_PERIODS: int = 200
    ORACLE_CFL: float = 0.9

    # Environment
    LOG_LEVEL: str = "INFO"
    ENVIRONMENT: str = "development"

    @field_validator(
        "RESONANCE_THRESHOLD", "NULLSPACE_RTOL", "MARGINAL_THRESHOLD", "SERIES_SWITCH",
        "EXPM_NORM_LIMIT", "SIGN_TOLERANCE", "SUBDIVISION_DENSITY", "RICHARDSON_TOL",
    )
    @classmethod
    def require_positive(cls, v: float) -> float:
        """Thresholds must be strictly positive."""
        if not v > 0:
            raise ValueError("must be strictly positive")
        return v

    @field_validator("ORACLE_CFL")
    @classmethod
    def validate_cfl(cls, v: float) -> float:
        if not 0 < v <= 1:
            raise ValueError("CFL number must lie in (0, 1]")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        """Accept level names in any case."""
        level = v.strip().upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"unknown log level {v!r}")
        return level


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
