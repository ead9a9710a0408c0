"""
Application settings and configuration.

Uses Pydantic Settings for type-safe configuration with environment variable support.
Numerical defaults shared by the dynamics, control and identification layers live here
so that scenario files only carry what they change.
"""

from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-wide settings loaded from environment variables (prefix ``HRI_``).
    """

    model_config = SettingsConfigDict(
        env_prefix="HRI_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    env: str = Field(default="development", description="Environment: development, staging, production")
    log_level: str = Field(default="WARNING", description="Logging level")
    log_format: str = Field(default="json", description="Log renderer: json or console")

    # Finite differences
    fd_step: float = Field(default=1e-6, description="Base step for central differences (scaled by state norm)", gt=0)

    # Wrench resolution
    gamma_condition_limit: float = Field(default=1e10, description="Max condition number of the contact operator", gt=1)
    gamma_damping_ratio: float = Field(default=1e-10, description="Damping (times trace/dim) for the fallback solve", ge=0)

    # Partner-aware control
    delta_condition_limit: float = Field(default=1e8, description="Max condition number of the task-torque map", gt=1)
    pinv_damping_ratio: float = Field(default=1e-8, description="Damped pseudo-inverse lambda relative to sigma_max", ge=0)
    posture_damping_ratio: float = Field(
        default=1e-3, description="Damping of the null-space posture inverse relative to sigma_max", ge=0
    )
    eps_chi: float = Field(default=1e-9, description="Task error norm below which alpha is zero", gt=0)

    # Simulation
    default_dt: float = Field(default=1e-3, description="Default integration step (seconds)", gt=0)
    baumgarte_zeta: float = Field(default=1.0, description="Constraint stabilization damping ratio", ge=0)
    baumgarte_omega: float = Field(default=20.0, description="Constraint stabilization natural frequency (rad/s)", ge=0)
    hysteresis_band: float = Field(default=0.05, description="Relative threshold band for state transitions", ge=0, le=1)
    lyapunov_tolerance: float = Field(default=1e-6, description="Allowed positive finite-difference Lyapunov rate")

    # Topology identification
    max_topology_joints: int = Field(default=12, description="Enumeration guard on catalog size", ge=1, le=20)
    topology_tie_rtol: float = Field(default=1e-6, description="Relative gap under which the ranking is ambiguous", ge=0)
    topology_workers: int = Field(default=1, description="Thread pool size for hypothesis scoring", ge=1)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is one of the standard levels."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v_upper

    @field_validator("env")
    @classmethod
    def validate_env(cls, v: str) -> str:
        """Validate environment is one of the allowed values."""
        valid_envs = ["development", "staging", "production"]
        v_lower = v.lower()
        if v_lower not in valid_envs:
            raise ValueError(f"env must be one of {valid_envs}")
        return v_lower

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        valid_formats = ["json", "console"]
        v_lower = v.lower()
        if v_lower not in valid_formats:
            raise ValueError(f"log_format must be one of {valid_formats}")
        return v_lower

    @property
    def is_development(self) -> bool:
        """Check if running in development environment."""
        return self.env == "development"


@lru_cache
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Uses lru_cache to ensure settings are loaded only once.
    Call this function to access settings throughout the application.

    Returns:
        Settings instance
    """
    return Settings()
