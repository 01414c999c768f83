"""Configuration management for einstein-lab."""

from typing import Optional, Tuple

from dotenv import load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load .env early so EINSTEIN_LAB_* variables are visible to pydantic
load_dotenv()


class Config(BaseSettings):
    """Numerical tolerances and runtime settings.

    Every field can be overridden with an ``EINSTEIN_LAB_<FIELD>`` environment
    variable or a ``.env`` file.
    """

    model_config = SettingsConfigDict(
        env_prefix="EINSTEIN_LAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Logging
    log_level: str = Field("INFO", description="Root log level for the CLI")
    log_file: Optional[str] = Field(None, description="Optional log file path")

    # Floors
    division_floor: float = Field(1e-300, gt=0.0)
    domain_floor: float = Field(1e-12, gt=0.0)

    # Root solving
    root_tolerance: float = Field(1e-7, gt=0.0)
    pair_cluster_radius: float = Field(1e-6, gt=0.0)
    cluster_radius: float = Field(1e-4, gt=0.0)
    near_double_gap: float = Field(1e-3, gt=0.0)
    newton_polish_steps: int = Field(2, ge=0)

    # Regularity
    lattice_search_bound: int = Field(64, ge=1)

    # Boundary asymptotics
    boundary_fit_window: Tuple[float, float] = (1e-5, 1e-3)
    boundary_fit_points: int = Field(16, ge=4)

    # Quadrature
    quadrature_tolerance: float = Field(1e-4, gt=0.0)
    quadrature_max_cells: int = Field(1_000_000, ge=16)
    sweep_rel_tolerance: float = Field(1e-6, ge=0.0)

    # CLI
    verify_tolerance: float = Field(1e-8, gt=0.0)
    default_seed: int = 42

    @field_validator("log_level", mode="before")
    def _normalize_log_level(cls, v):
        """Accept log levels in any case."""
        if isinstance(v, str):
            return v.strip().upper()
        return v

    @field_validator("boundary_fit_window")
    def _check_window(cls, v):
        """Fit windows are positive and increasing."""
        lo, hi = v
        if not 0.0 < lo < hi:
            raise ValueError(f"boundary_fit_window must satisfy 0 < lo < hi, got {v}")
        return v


# Global configuration instance
config = Config()
