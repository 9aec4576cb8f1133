import logging
from pathlib import Path
from dotenv import load_dotenv
from pydantic import field_validator, Field
from pydantic_settings import BaseSettings
from functools import lru_cache

project_root = Path(__file__).parent.parent
env_path = project_root / ".env"

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

if env_path.exists():
    load_dotenv(dotenv_path=env_path)
    logger.debug(f"Loaded environment from {env_path}")


class Settings(BaseSettings):
    APP_NAME: str = "hereditary"
    APP_VERSION: str = "0.1.0"
    APP_DESCRIPTION: str = "Optimal internal-variable models of linear viscoelastic memory"
    LOG_LEVEL: str = "INFO"

    DEFAULT_GRID_INTERVALS: int = Field(2000, description="Uniform grid intervals on [0, T]")
    DEFAULT_QUADRATURE: str = "simpson"  # trapezoid, simpson
    SAMPLING_WORKERS: int = Field(1, description="Concurrent oracle evaluations during basis sampling")
    JACOBI_MAX_SWEEPS: int = Field(60, description="Sweep cap for the cyclic Jacobi eigensolver")
    OUTPUT_DIR: str = "./out"

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalize_log_level(cls, v):
        """Upper-case LOG_LEVEL; it must name one of the CLI's --log-level choices."""
        level = str(v).strip().upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL must be one of {LOG_LEVELS}, got {v!r}")
        return level

    @field_validator("DEFAULT_QUADRATURE")
    @classmethod
    def validate_quadrature(cls, v):
        """Ensure DEFAULT_QUADRATURE names a supported nodal rule."""
        allowed_rules = ["trapezoid", "simpson"]
        if v not in allowed_rules:
            raise ValueError(f"DEFAULT_QUADRATURE must be one of {allowed_rules}")
        return v

    @field_validator("DEFAULT_GRID_INTERVALS")
    @classmethod
    def validate_grid_intervals(cls, v):
        """Simpson needs an even interval count."""
        if v < 2 or v % 2:
            raise ValueError("DEFAULT_GRID_INTERVALS must be an even integer >= 2")
        return v

    @field_validator("SAMPLING_WORKERS", "JACOBI_MAX_SWEEPS")
    @classmethod
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError("value must be >= 1")
        return v

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": True,
        "extra": "ignore",
    }


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
