"""Experiment files, scale profiles and the seed runner."""

from app.experiments.scale import apply_scale
from app.experiments.schemas import (
    DryRunReport,
    ExperimentConfig,
    ModelOverrides,
    Scale,
)
from app.experiments.service import (
    build_dataset,
    dry_run,
    generate_data,
    load_experiment,
    operation_label,
    output_root,
    run_dir,
    run_experiment,
    run_seed,
)

__all__ = [
    "DryRunReport",
    "ExperimentConfig",
    "ModelOverrides",
    "Scale",
    "apply_scale",
    "build_dataset",
    "dry_run",
    "generate_data",
    "load_experiment",
    "operation_label",
    "output_root",
    "run_dir",
    "run_experiment",
    "run_seed",
]
