"""Configuration management for Torsion Flow."""

import logging
import sys

import structlog
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings and configuration."""

    model_config = SettingsConfigDict(
        env_prefix="TORSION_FLOW_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = Field(default="warning")
    log_format: str = Field(default="console")  # console, json

    # Integrator defaults
    rtol: float = Field(default=1e-10, gt=0)
    atol: float = Field(default=1e-12, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    blowup_threshold: float = Field(default=1e9, gt=0)
    convergence_radius: float = Field(default=1e-8, gt=0)
    dt_min: float = Field(default=1e-12, gt=0)
    samples: int = Field(default=200, ge=2)

    # Flow and functional parameters
    vol0: float = Field(default=1.0, gt=0)
    tau_min: float = Field(default=1e-9, gt=0)
    fd_step: float = Field(default=1e-4, gt=0)

    # Self-verification
    verify_cases: int = Field(default=200, ge=1)
    verify_seed: int = Field(default=0)


def configure_logging(level: str | None = None, fmt: str | None = None) -> None:
    """Route structlog through stdlib logging on stderr.

    stdout is reserved for CSV and report output.
    """
    level_name = (level or settings.log_level).upper()
    numeric_level = getattr(logging, level_name, None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Unknown log level: {level}")

    logging.basicConfig(
        level=numeric_level,
        stream=sys.stderr,
        format="%(message)s",
        force=True,
    )

    renderer: structlog.types.Processor
    if (fmt or settings.log_format) == "json":
        renderer = structlog.processors.JSONRenderer()
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=False)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


# Global settings instance
settings = Settings()
