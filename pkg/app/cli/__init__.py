"""Command-line front end."""

import typer

from app.cli.commands import analyze_embeddings, gen_data, report, train_cmd, verify_ka
from app.config import get_settings
from app.core.logging import setup_logging

app = typer.Typer(
    name="grok-lab",
    help="grok-lab - grokking experiments on modular arithmetic",
    no_args_is_help=True,
)


@app.callback()
def main(
    log_level: str | None = typer.Option(
        None, "--log-level", help="Override GROK_LOG_LEVEL"
    ),
) -> None:
    """Configure logging before any subcommand runs."""
    setup_logging((log_level or get_settings().log_level).upper())


app.command("gen-data")(gen_data)
app.command("train")(train_cmd)
app.command("verify-ka")(verify_ka)
app.command("analyze-embeddings")(analyze_embeddings)
app.command("report")(report)


@app.command()
def version() -> None:
    """Show the application version."""
    from importlib.metadata import PackageNotFoundError, version as get_version

    try:
        ver = get_version("grok-lab")
    except PackageNotFoundError:
        ver = "0.1.0 (development)"
    typer.echo(f"grok-lab version {ver}")


if __name__ == "__main__":
    app()
