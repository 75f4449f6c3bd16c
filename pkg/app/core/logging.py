"""Logging setup: stderr records stamped with the current run id."""

import logging
import sys
from typing import Any, TextIO

from app.core.context import run_id_var

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(run_id)s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class RunIdFilter(logging.Filter):
    """Stamp ``record.run_id`` with the bound run, or ``-`` outside any run."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_id = run_id_var.get() or "-"
        return True


def setup_logging(
    log_level: str = "INFO", stream: TextIO | None = None
) -> logging.Handler:
    """Replace the root handlers with a single run-aware stream handler.

    stdout stays reserved for machine-readable CLI output, so records go to
    stderr unless ``stream`` says otherwise.

    Args:
        log_level: The logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
        stream: Destination; defaults to the current ``sys.stderr``.

    Returns:
        The installed handler.
    """
    root = logging.getLogger()
    root.setLevel(log_level)
    for handler in root.handlers[:]:
        root.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setLevel(log_level)
    handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT))
    handler.addFilter(RunIdFilter())
    root.addHandler(handler)
    return handler


def get_logger(name: str) -> logging.Logger:
    """Logger that stamps its own records with the run id.

    Records then carry ``run_id`` even under handlers that ``setup_logging``
    did not install (pytest's ``caplog``, an embedding application).
    """
    logger = logging.getLogger(name)
    if not any(isinstance(f, RunIdFilter) for f in logger.filters):
        logger.addFilter(RunIdFilter())
    return logger


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def log_with_context(
    logger: logging.Logger,
    level: int,
    message: str,
    **context: Any,
) -> None:
    """Log ``message`` followed by ``| key=value`` pairs; floats keep 4 digits."""
    if context:
        message = " | ".join([message, *(f"{k}={_fmt(v)}" for k, v in context.items())])
    logger.log(level, message)
