"""Metric persistence: CSV history and RunRecord JSON."""

import csv
import logging
from pathlib import Path
from types import TracebackType
from typing import Self

from pydantic import ValidationError

from app.core.exceptions import ConfigParseError, FileError
from app.training.schemas import HistoryPoint, RunRecord

logger = logging.getLogger(__name__)

METRICS_HEADER = ("step", "train_loss", "train_acc", "test_acc")


class MetricsWriter:
    """Single-writer CSV sink, flushed after every row.

    Usage::

        with MetricsWriter(run_dir / "metrics.csv") as sink:
            sink.write(point)
    """

    def __init__(self, path: Path) -> None:
        self.path = path
        path.parent.mkdir(parents=True, exist_ok=True)
        self._file = path.open("w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(METRICS_HEADER)

    def write(self, point: HistoryPoint) -> None:
        self._writer.writerow(
            [
                point.step,
                repr(point.train_loss),
                repr(point.train_acc),
                repr(point.test_acc),
            ]
        )
        self._file.flush()

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> Self:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()


def read_metrics(path: Path) -> list[HistoryPoint]:
    if not path.is_file():
        raise FileError(f"metrics not found: {path}", details={"path": str(path)})
    with path.open(encoding="utf-8", newline="") as f:
        return [HistoryPoint.model_validate(row) for row in csv.DictReader(f)]


def write_run_record(path: Path, record: RunRecord) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(record.model_dump_json(indent=2), encoding="utf-8")
    return path


def read_run_record(path: Path) -> RunRecord:
    if not path.is_file():
        raise FileError(f"run record not found: {path}", details={"path": str(path)})
    try:
        return RunRecord.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigParseError(
            f"invalid run record {path}: {e}", details={"path": str(path)}
        ) from e


def find_run_records(run_dir: Path) -> list[Path]:
    """Every ``run_record.json`` below ``run_dir``, in sorted order."""
    if not run_dir.is_dir():
        raise FileError(
            f"run directory not found: {run_dir}", details={"path": str(run_dir)}
        )
    found = sorted(run_dir.rglob("run_record.json"))
    logger.debug("Found %d run records under %s", len(found), run_dir)
    return found
