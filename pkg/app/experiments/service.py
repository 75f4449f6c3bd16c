"""Experiment runner: datasets, models, transfer, training and artifacts per seed."""

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.config import get_settings
from app.core.context import run_context
from app.core.exceptions import ConfigParseError, FileError
from app.core.logging import get_logger
from app.data.generators import gen_binary, gen_composition, gen_limited, gen_system
from app.data.io import write_split
from app.data.schemas import Split, TaskKind
from app.data.vocab import Vocab, build_vocab
from app.experiments.schemas import DryRunReport, ExperimentConfig, Scale
from app.model.checkpoint import save_checkpoint
from app.model.schemas import ModelConfig
from app.model.transformer import Model, init_model
from app.training.metrics import MetricsWriter, write_run_record
from app.training.schemas import RunRecord
from app.training.service import train
from app.transfer.service import apply_transfer

logger = get_logger(__name__)

CONFIG_FILE = "config.json"
METRICS_FILE = "metrics.csv"
RECORD_FILE = "run_record.json"
CHECKPOINT_FILE = "model.ckpt"
DATA_DIR = "data"
BINARY_PROMPT = 4
SYSTEM_PROMPT = 13


def load_experiment(path: Path) -> ExperimentConfig:
    """Parse and validate an experiment file.

    Raises:
        FileError: If the file does not exist.
        ConfigParseError: If it is not valid JSON or fails validation.
    """
    if not path.is_file():
        raise FileError(
            f"experiment config not found: {path}", details={"path": str(path)}
        )
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return ExperimentConfig.model_validate(raw)
    except json.JSONDecodeError as e:
        raise ConfigParseError(
            f"{path}: invalid JSON at line {e.lineno}",
            details={"path": str(path), "line": e.lineno},
        ) from e
    except ValidationError as e:
        raise ConfigParseError(
            f"{path}: {e.error_count()} invalid field(s)",
            details={
                "path": str(path),
                "errors": e.errors(include_url=False, include_context=False),
            },
        ) from e


def output_root(cfg: ExperimentConfig, override: Path | None = None) -> Path:
    """``--out`` beats the file's ``output_dir``, which beats ``GROK_OUTPUT_DIR``."""
    if override is not None:
        return override
    if cfg.output_dir is not None:
        return Path(cfg.output_dir)
    return get_settings().output_dir


def run_dir(root: Path, cfg: ExperimentConfig, seed: int) -> Path:
    return root / cfg.name / f"seed_{seed}"


def operation_label(cfg: ExperimentConfig) -> str:
    """Display form of the learnt function, e.g. ``x1+x2+x3`` or ``system(x1*x2)``."""
    if cfg.task is TaskKind.SYSTEM:
        return f"system({cfg.op.formula})"
    if cfg.task in (TaskKind.COMPOSITION, TaskKind.LIMITED_TOKENS):
        return cfg.op.symbol.join(f"x{i}" for i in range(1, cfg.n_operands + 1))
    return cfg.op.formula


def prompt_length(cfg: ExperimentConfig) -> int:
    if cfg.task is TaskKind.SYSTEM:
        return SYSTEM_PROMPT
    if cfg.task is TaskKind.BINARY:
        return BINARY_PROMPT
    return 2 * cfg.n_operands


def experiment_vocab(cfg: ExperimentConfig) -> Vocab:
    return build_vocab(cfg.p, [cfg.op], system=cfg.task is TaskKind.SYSTEM)


def model_config(cfg: ExperimentConfig, vocab: Vocab) -> ModelConfig:
    return ModelConfig(
        vocab_size=vocab.size, max_seq_len=prompt_length(cfg), **cfg.model.model_dump()
    )


def build_dataset(
    cfg: ExperimentConfig, seed: int, vocab: Vocab | None = None
) -> Split:
    """Generate the split this experiment trains on for ``seed``."""
    vocab = vocab or experiment_vocab(cfg)
    match cfg.task:
        case TaskKind.BINARY:
            return gen_binary(cfg.op, cfg.p, cfg.n_train, seed, vocab)
        case TaskKind.COMPOSITION:
            return gen_composition(
                cfg.op,
                cfg.n_operands,
                cfg.p,
                cfg.n_train,
                cfg.n_val,
                cfg.n_test,
                seed,
                vocab,
            )
        case TaskKind.SYSTEM:
            return gen_system(
                cfg.op, cfg.p, cfg.n_train, cfg.n_val, cfg.n_test, seed, vocab
            )
        case TaskKind.LIMITED_TOKENS:
            return gen_limited(
                cfg.op,
                cfg.n_operands,
                cfg.p,
                cfg.n_train,
                cfg.n_val,
                cfg.n_test,
                cfg.max_operand,
                seed,
                vocab,
            )


def transfer_source(cfg: ExperimentConfig, root: Path, seed: int) -> Path | None:
    """Checkpoint path with ``{output_dir}`` and ``{seed}`` filled in."""
    if cfg.transfer is None:
        return None
    resolved = cfg.transfer.source_checkpoint.replace("{output_dir}", str(root))
    return Path(resolved.replace("{seed}", str(seed)))


def check_sources(cfg: ExperimentConfig, root: Path) -> None:
    """Every seed's transfer checkpoint must exist before any training starts."""
    missing = [
        str(path)
        for seed in cfg.seeds
        if (path := transfer_source(cfg, root, seed)) is not None and not path.is_file()
    ]
    if missing:
        raise FileError(
            f"transfer source checkpoint not found: {missing[0]}",
            details={"paths": missing, "experiment": cfg.name},
        )


def dry_run(
    cfg: ExperimentConfig, root: Path, scale: Scale = Scale.PAPER
) -> DryRunReport:
    """Resolve vocabulary, prompt length and model size without generating data."""
    vocab = experiment_vocab(cfg)
    model_cfg = model_config(cfg, vocab)
    sources = [transfer_source(cfg, root, seed) for seed in cfg.seeds]
    return DryRunReport(
        name=cfg.name,
        task=cfg.task,
        operation=operation_label(cfg),
        p=cfg.p,
        vocab_size=vocab.size,
        seq_len=model_cfg.max_seq_len,
        parameter_count=model_cfg.parameter_count(),
        seeds=cfg.seeds,
        run_dirs=[str(run_dir(root, cfg, seed)) for seed in cfg.seeds],
        transfer_sources=[str(s) for s in sources if s is not None],
        scale=scale,
    )


def generate_data(cfg: ExperimentConfig, root: Path) -> list[Path]:
    """Write each seed's dataset under ``<run dir>/data``."""
    written: list[Path] = []
    vocab = experiment_vocab(cfg)
    for seed in cfg.seeds:
        with run_context(f"{cfg.name}/seed={seed}"):
            split = build_dataset(cfg, seed, vocab)
            written += write_split(run_dir(root, cfg, seed) / DATA_DIR, split, vocab)
    return written


def _prepare_model(
    cfg: ExperimentConfig, vocab: Vocab, root: Path, seed: int
) -> tuple[Model, dict[str, Any] | None]:
    model = init_model(model_config(cfg, vocab), seed)
    source = transfer_source(cfg, root, seed)
    if cfg.transfer is None or source is None:
        return model, None
    spec = cfg.transfer.model_copy(update={"source_checkpoint": str(source)})
    summary = apply_transfer(spec, model, vocab)
    return model, summary.model_dump(mode="json")


def run_seed(cfg: ExperimentConfig, seed: int, root: Path) -> RunRecord:
    """Train one seed and write its config, metrics, run record and checkpoint."""
    directory = run_dir(root, cfg, seed)
    with run_context(f"{cfg.name}/seed={seed}"):
        directory.mkdir(parents=True, exist_ok=True)
        config_json = cfg.model_dump_json(indent=2)
        (directory / CONFIG_FILE).write_text(config_json, encoding="utf-8")
        vocab = experiment_vocab(cfg)
        split = build_dataset(cfg, seed, vocab)
        model, transfer = _prepare_model(cfg, vocab, root, seed)
        train_cfg = cfg.train.model_copy(update={"seed": seed})
        record = RunRecord(
            operation=operation_label(cfg),
            task=str(cfg.task),
            n_train=cfg.n_train,
            method=cfg.method,
            seed=seed,
            p=cfg.p,
            transfer=transfer,
            config={
                "experiment": cfg.name,
                "model": model.config.model_dump(mode="json"),
            },
        )
        tokens = list(vocab.tokens)

        def snapshot(step: int, m: Model) -> None:
            save_checkpoint(directory / f"step_{step}.ckpt", m, cfg.p, tokens)

        with MetricsWriter(directory / METRICS_FILE) as sink:
            result = train(
                model,
                split,
                train_cfg,
                record=record,
                metrics=sink,
                on_checkpoint=snapshot,
            )
        save_checkpoint(directory / CHECKPOINT_FILE, model, cfg.p, tokens)
        write_run_record(directory / RECORD_FILE, result)
        logger.info(
            "Finished %s seed %d: grok_step=%s final_test_acc=%.4f",
            cfg.name, seed, result.grok_step, result.final_test_acc,
        )
        return result


def run_experiment(
    cfg: ExperimentConfig, root: Path, threads: int | None = None
) -> list[RunRecord]:
    """Run every seed, up to ``threads`` at a time, and return records in seed order.

    Raises:
        FileError: If any seed's transfer source is missing.
    """
    check_sources(cfg, root)
    workers = min(threads or get_settings().threads, len(cfg.seeds))
    logger.info(
        "Running %s: %d seed(s) on %d worker(s)", cfg.name, len(cfg.seeds), workers
    )
    if workers <= 1:
        return [run_seed(cfg, seed, root) for seed in cfg.seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda seed: run_seed(cfg, seed, root), cfg.seeds))
