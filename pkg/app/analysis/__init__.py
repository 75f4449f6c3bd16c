"""Embedding geometry and run-report tables."""

from app.analysis.projection import (
    AngleStats,
    EmbeddingProjection,
    angle_uniformity,
    numeral_embeddings,
    pca2,
    write_projection_csv,
)
from app.analysis.report import (
    TABLE_COLUMNS,
    TableRow,
    aggregate_runs,
    render_text,
    write_table_csv,
)

__all__ = [
    "TABLE_COLUMNS",
    "AngleStats",
    "EmbeddingProjection",
    "TableRow",
    "aggregate_runs",
    "angle_uniformity",
    "numeral_embeddings",
    "pca2",
    "render_text",
    "write_projection_csv",
    "write_table_csv",
]
