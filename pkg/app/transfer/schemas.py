"""Transfer settings and the summary stored in run records."""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field


class TransferMode(StrEnum):
    """Which part of a source model is carried over."""

    DECODER_BLOCK = "decoder_block"
    EMBEDDING = "embedding"
    HYBRID_EMBEDDING = "hybrid_embedding"


class TransferSpec(BaseModel):
    """Where weights come from and whether they stay fixed.

    ``source_checkpoint`` may contain ``{output_dir}`` and ``{seed}``
    placeholders; the experiment runner fills them in per seed.
    """

    model_config = ConfigDict(extra="forbid")

    mode: TransferMode
    source_checkpoint: str = Field(min_length=1)
    # hybrid mode always freezes the copied rows
    freeze_transferred: bool = True


class TransferSummary(BaseModel):
    """What a transfer copied, recorded alongside the run."""

    mode: TransferMode
    source_checkpoint: str
    freeze_transferred: bool
    tensors: list[str] = Field(default_factory=list)
    token_rows: int = 0
    position_rows: int = 0
    trainable_token_rows: int = 0
