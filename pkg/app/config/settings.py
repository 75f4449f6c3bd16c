"""Lab settings using Pydantic Settings."""

from functools import lru_cache
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Validation constants
THREADS_MIN = 1
THREADS_MAX = 256
EVAL_CHUNK_MIN = 1
EVAL_CHUNK_MAX = 1 << 16


class Settings(BaseSettings):
    """Lab settings loaded from ``GROK_*`` environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="GROK_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "grok-lab"
    log_level: str = "INFO"

    # Worker parallelism (seeds per experiment, evaluation shards)
    threads: int = 1

    # Artifacts
    output_dir: Path = Path("runs")

    # Evaluation batch size for accuracy sweeps
    eval_chunk_size: int = 2048

    # Integer-decoding tolerance for exact representations
    ka_tolerance: float = 1e-6

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is a valid Python logging level."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        upper_v = v.upper()
        if upper_v not in valid_levels:
            msg = f"Invalid log level: {v}. Must be one of {valid_levels}"
            raise ValueError(msg)
        return upper_v

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        """Validate the worker cap is within reasonable bounds."""
        if v < THREADS_MIN:
            msg = f"threads must be at least {THREADS_MIN}"
            raise ValueError(msg)
        if v > THREADS_MAX:
            msg = f"threads must be at most {THREADS_MAX}"
            raise ValueError(msg)
        return v

    @field_validator("eval_chunk_size")
    @classmethod
    def validate_eval_chunk_size(cls, v: int) -> int:
        """Validate the evaluation chunk size is within reasonable bounds."""
        if not EVAL_CHUNK_MIN <= v <= EVAL_CHUNK_MAX:
            msg = f"eval_chunk_size must be in [{EVAL_CHUNK_MIN}, {EVAL_CHUNK_MAX}]"
            raise ValueError(msg)
        return v

    @field_validator("ka_tolerance")
    @classmethod
    def validate_ka_tolerance(cls, v: float) -> float:
        """Validate the decoding tolerance is a small positive number."""
        if not 0.0 < v < 0.5:  # noqa: PLR2004
            msg = "ka_tolerance must be in (0, 0.5)"
            raise ValueError(msg)
        return v


@lru_cache
def get_settings() -> Settings:
    """Get cached lab settings."""
    return Settings()
