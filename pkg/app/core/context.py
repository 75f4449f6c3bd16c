"""Run context propagated to log records."""

from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar

# Identifies the experiment run (``name/seed=N``) the current code path works for
run_id_var: ContextVar[str] = ContextVar("run_id", default="")


@contextmanager
def run_context(run_id: str) -> Iterator[str]:
    """Bind ``run_id`` for the duration of the block.

    Args:
        run_id: Identifier stamped on every log record emitted inside the block.

    Yields:
        The bound run id.
    """
    token = run_id_var.set(run_id)
    try:
        yield run_id
    finally:
        run_id_var.reset(token)
