"""AdamW, the training loop, evaluation and run records."""

from app.training.metrics import (
    MetricsWriter,
    find_run_records,
    read_metrics,
    read_run_record,
    write_run_record,
)
from app.training.optimizer import AdamW, AdamWState, adamw_step
from app.training.schemas import HistoryPoint, RunRecord, TrainConfig
from app.training.service import detect_grokking, evaluate, train

__all__ = [
    "AdamW",
    "AdamWState",
    "HistoryPoint",
    "MetricsWriter",
    "RunRecord",
    "TrainConfig",
    "adamw_step",
    "detect_grokking",
    "evaluate",
    "find_run_records",
    "read_metrics",
    "read_run_record",
    "train",
    "write_run_record",
]
