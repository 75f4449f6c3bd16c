"""Subcommands: data generation, training, KA verification, analysis and reports."""

import json
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from app.analysis.projection import (
    angle_uniformity,
    numeral_embeddings,
    pca2,
    write_projection_csv,
)
from app.analysis.report import (
    TABLE_COLUMNS,
    aggregate_runs,
    render_text,
    write_table_csv,
)
from app.config import get_settings
from app.core.exceptions import ConfigError, ConfigParseError, GrokLabError
from app.experiments.scale import apply_scale
from app.experiments.schemas import ExperimentConfig, Scale
from app.experiments.service import (
    dry_run,
    generate_data,
    load_experiment,
    output_root,
    run_experiment,
)
from app.ka.schemas import GroupKind
from app.ka.verify import run_suite, verify_wrap_identity
from app.model.checkpoint import load_checkpoint
from app.model.transformer import EmbeddingStage
from app.training.metrics import find_run_records, read_run_record

console = Console()
error_console = Console(stderr=True)


@contextmanager
def reporting_errors() -> Iterator[None]:
    """Turn a lab error into one JSON line on stderr and its exit code.

    Validation failures of command-line overrides are reported as
    ``ConfigParseError``.
    """
    try:
        yield
    except ValidationError as e:
        error = ConfigParseError(
            f"{e.error_count()} invalid field(s) after overrides",
            details={"errors": e.errors(include_url=False, include_context=False)},
        )
        typer.echo(json.dumps(error.to_payload(), default=str), err=True)
        raise typer.Exit(error.exit_code) from None
    except GrokLabError as e:
        typer.echo(json.dumps(e.to_payload(), default=str), err=True)
        raise typer.Exit(e.exit_code) from None


def _parse_seeds(seeds: str | None) -> list[int] | None:
    if seeds is None:
        return None
    try:
        return [int(s) for s in seeds.split(",") if s.strip()]
    except ValueError as e:
        raise ConfigError(
            f"--seed expects comma-separated integers, got {seeds!r}"
        ) from e


def _experiment(config: Path, seeds: str | None, scale: Scale) -> ExperimentConfig:
    cfg = load_experiment(config)
    override = _parse_seeds(seeds)
    if override:
        cfg = ExperimentConfig.model_validate({**cfg.model_dump(), "seeds": override})
    return apply_scale(cfg, scale)


ConfigOption = typer.Option(..., "--config", "-c", help="Experiment JSON file")
SeedOption = typer.Option(
    None, "--seed", help="Comma-separated seeds overriding the file"
)
ScaleOption = typer.Option(Scale.PAPER, "--scale", help="Size profile")
OutOption = typer.Option(None, "--out", "-o", help="Output root directory")


def gen_data(
    config: Path = ConfigOption,
    seed: str | None = SeedOption,
    scale: Scale = ScaleOption,
    out: Path | None = OutOption,
) -> None:
    """Generate and write the datasets of an experiment."""
    with reporting_errors():
        cfg = _experiment(config, seed, scale)
        written = generate_data(cfg, output_root(cfg, out))
        console.print(
            f"[bold green]Wrote {len(written)} files[/bold green] for {cfg.name}"
        )


def train_cmd(
    config: Path = ConfigOption,
    seed: str | None = SeedOption,
    scale: Scale = ScaleOption,
    out: Path | None = OutOption,
    dry_run_: bool = typer.Option(
        False, "--dry-run", help="Validate and size the run only"
    ),
    threads: int | None = typer.Option(None, "--threads", min=1, help="Seed workers"),
) -> None:
    """Train every seed of an experiment."""
    with reporting_errors():
        cfg = _experiment(config, seed, scale)
        root = output_root(cfg, out)
        if dry_run_:
            typer.echo(dry_run(cfg, root, scale).model_dump_json())
            return
        records = run_experiment(cfg, root, threads)
        table = Table(title=cfg.name)
        for column in ("Seed", "Grokking step", "Final train acc", "Final test acc"):
            table.add_column(column)
        for r in records:
            table.add_row(
                str(r.seed),
                "Non-grokked" if r.grok_step is None else str(r.grok_step),
                f"{r.final_train_acc:.4f}",
                f"{r.final_test_acc:.4f}",
            )
        console.print(table)


def verify_ka(
    p: int = typer.Option(97, "--p", help="Prime modulus"),
    kind: list[GroupKind] | None = typer.Option(
        None, "--kind", help="Representation kinds"
    ),
    samples: int = typer.Option(
        10_000, "--samples", min=1, help="Random tuples per n-ary check"
    ),
    seed: int = typer.Option(0, "--seed", help="Sampling seed"),
) -> None:
    """Verify the exact representations; one JSON report per line on stdout."""
    with reporting_errors():
        tol = get_settings().ka_tolerance
        reports = run_suite(p, kind, samples=samples, seed=seed, tol=tol)
        for report in reports:
            typer.echo(report.model_dump_json())
        wrap_failures = verify_wrap_identity(samples, seed)
        wrap_report = {
            "rep": "wrap_identity",
            "checked": samples,
            "failed": wrap_failures,
        }
        typer.echo(json.dumps(wrap_report))
        failed = sum(not r.ok for r in reports) + (wrap_failures > 0)
        if failed:
            error_console.print(f"[red]{failed} check(s) failed[/red]")
            raise typer.Exit(1)
        error_console.print(f"[green]All {len(reports) + 1} checks passed[/green]")


def analyze_embeddings(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="GROKCKPT file"),
    stage: EmbeddingStage = typer.Option(
        EmbeddingStage.TABLE, "--stage", help="table or mlp"
    ),
    out: Path | None = typer.Option(None, "--out", "-o", help="Projection CSV path"),
) -> None:
    """Project numeral embeddings onto two principal components."""
    with reporting_errors():
        ckpt = load_checkpoint(checkpoint)
        model = ckpt.build_model()
        p = ckpt.meta.p
        proj = pca2(numeral_embeddings(model, p, stage))
        path = out or checkpoint.with_name(f"{checkpoint.stem}_{stage}_projection.csv")
        write_projection_csv(path, proj, ckpt.meta.tokens)
        stats = angle_uniformity(proj)
        payload: dict[str, Any] = {
            "projection": str(path),
            "explained_variance_ratio": proj.explained_variance_ratio.tolist(),
            **stats.model_dump(),
        }
        typer.echo(json.dumps(payload))


def report(
    run_dir: Path = typer.Option(
        ..., "--run-dir", help="Directory holding run records"
    ),
    out: Path | None = typer.Option(
        None, "--out", "-o", help="CSV path (default <run-dir>/report.csv)"
    ),
    group_by: list[str] | None = typer.Option(
        None, "--group-by", help="Extra grouping fields"
    ),
) -> None:
    """Aggregate run records into a grokking table."""
    with reporting_errors():
        records = [read_run_record(path) for path in find_run_records(run_dir)]
        keys = ["operation", "n_train", "method", *(group_by or [])]
        rows = aggregate_runs(records, list(dict.fromkeys(keys)))
        csv_path = write_table_csv(out or run_dir / "report.csv", rows)
        csv_path.with_suffix(".txt").write_text(render_text(rows), encoding="utf-8")
        table = Table(title=f"{len(records)} runs")
        for column in TABLE_COLUMNS:
            table.add_column(column)
        for row in rows:
            table.add_row(*row.cells())
        console.print(table)
        console.print(f"[dim]Wrote {csv_path}[/dim]")
