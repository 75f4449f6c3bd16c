"""Aggregation of run records into grokking tables."""

import csv
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from app.core.exceptions import ConfigError, EmptyGroupError
from app.training.schemas import RunRecord

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("Operation", "N", "Method", "Grokking step", "Final accuracy")
NON_GROKKED = "Non-grokked"
REQUIRED_KEYS = ("operation", "n_train", "method")
GROUPABLE_KEYS = frozenset({*REQUIRED_KEYS, "task", "p"})


class TableRow(BaseModel):
    """One group of seeds, summarised.

    Grokking-step statistics cover only the seeds that grokked; accuracy
    statistics cover every seed. Standard deviations use ``n - 1``.
    """

    operation: str
    n: int
    method: str
    runs: int
    grokked: int
    grok_step_mean: float | None = None
    grok_step_std: float | None = None
    final_acc_mean: float
    final_acc_std: float

    @property
    def grokked_fraction(self) -> float:
        return self.grokked / self.runs

    @property
    def grok_step_cell(self) -> str:
        if self.grok_step_mean is None:
            return NON_GROKKED
        return f"{self.grok_step_mean:.0f} (± {self.grok_step_std or 0.0:.0f})"

    @property
    def final_acc_cell(self) -> str:
        return f"{100 * self.final_acc_mean:.2f} (± {100 * self.final_acc_std:.2f})"

    def cells(self) -> list[str]:
        return [
            self.operation,
            str(self.n),
            self.method,
            self.grok_step_cell,
            self.final_acc_cell,
        ]


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    ordered = sorted(values)
    mean = math.fsum(ordered) / len(ordered)
    std = float(np.std(ordered, ddof=1)) if len(ordered) > 1 else 0.0
    return mean, std


def _summarise(records: Sequence[RunRecord]) -> TableRow:
    first = records[0]
    steps = [float(r.grok_step) for r in records if r.grok_step is not None]
    acc_mean, acc_std = _mean_std([r.final_test_acc for r in records])
    step_mean, step_std = _mean_std(steps) if steps else (None, None)
    return TableRow(
        operation=first.operation,
        n=first.n_train,
        method=first.method,
        runs=len(records),
        grokked=len(steps),
        grok_step_mean=step_mean,
        grok_step_std=step_std,
        final_acc_mean=acc_mean,
        final_acc_std=acc_std,
    )


def aggregate_runs(
    records: Iterable[RunRecord], group_by: Sequence[str] = REQUIRED_KEYS
) -> list[TableRow]:
    """Group run records (one per seed) and summarise each group.

    Rows come back sorted by group key, so the result does not depend on
    record order.

    Raises:
        EmptyGroupError: If there are no records.
        ConfigError: If ``group_by`` names an unknown field or omits
            operation, n_train or method.
    """
    keys = tuple(group_by)
    unknown = set(keys) - GROUPABLE_KEYS
    missing = set(REQUIRED_KEYS) - set(keys)
    if unknown or missing:
        raise ConfigError(
            f"group_by must include {list(REQUIRED_KEYS)} "
            f"and only use {sorted(GROUPABLE_KEYS)}",
            details={"unknown": sorted(unknown), "missing": sorted(missing)},
        )
    groups: dict[tuple[Any, ...], list[RunRecord]] = defaultdict(list)
    for record in records:
        groups[tuple(getattr(record, k) for k in keys)].append(record)
    if not groups:
        raise EmptyGroupError("no run records to aggregate")
    rows = [_summarise(groups[key]) for key in sorted(groups)]
    total = sum(map(len, groups.values()))
    logger.info("Aggregated %d runs into %d rows", total, len(rows))
    return rows


def write_table_csv(path: Path, rows: Sequence[TableRow]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        writer.writerows(row.cells() for row in rows)
    return path


def render_text(rows: Sequence[TableRow]) -> str:
    """Plain aligned-column rendering of the table."""
    table = [list(TABLE_COLUMNS), *(row.cells() for row in rows)]
    widths = [max(len(line[i]) for line in table) for i in range(len(TABLE_COLUMNS))]
    lines = [
        "  ".join(c.ljust(w) for c, w in zip(line, widths, strict=True)).rstrip()
        for line in table
    ]
    return "\n".join(lines) + "\n"
