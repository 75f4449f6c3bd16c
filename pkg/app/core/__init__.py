"""Core utilities: errors, logging and run context."""

from app.core.context import run_context, run_id_var
from app.core.exceptions import (
    ConfigError,
    FileError,
    GrokLabError,
)

__all__ = [
    "ConfigError",
    "FileError",
    "GrokLabError",
    "run_context",
    "run_id_var",
]
