"""Experiment files: one JSON document per experiment."""

from enum import StrEnum
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.data.generators import (
    DEFAULT_MAX_OPERAND,
    DEFAULT_N_TEST,
    DEFAULT_N_VAL,
    MAX_COMPOSITION_OPERANDS,
    MIN_COMPOSITION_OPERANDS,
)
from app.data.schemas import TaskKind
from app.groups.number_theory import is_prime
from app.groups.ops import Op
from app.model.schemas import (
    DEFAULT_CLASSIFIER_HIDDEN,
    DEFAULT_D_MODEL,
    DEFAULT_EMBED_MLP_DEPTH,
    DEFAULT_N_HEADS,
    DEFAULT_N_LAYERS,
)
from app.training.schemas import TrainConfig
from app.transfer.schemas import TransferMode, TransferSpec

DEFAULT_P = 97
BINARY_OPERANDS = 2
GROUP_OPS = frozenset({Op.ADD, Op.MUL})


class Scale(StrEnum):
    """Size profile applied on top of an experiment file."""

    PAPER = "paper"
    CI = "ci"


class ModelOverrides(BaseModel):
    """Architecture knobs; vocabulary size and sequence length come from the task."""

    model_config = ConfigDict(extra="forbid")

    d_model: int = Field(default=DEFAULT_D_MODEL, ge=1)
    n_heads: int = Field(default=DEFAULT_N_HEADS, ge=1)
    n_layers: int = Field(default=DEFAULT_N_LAYERS, ge=0)
    embed_mlp_depth: int = Field(default=DEFAULT_EMBED_MLP_DEPTH, ge=0)
    classifier_hidden: int = Field(default=DEFAULT_CLASSIFIER_HIDDEN, ge=1)


class ExperimentConfig(BaseModel):
    """One experiment: a task, a training recipe and the seeds to run it with.

    ``n_val`` and ``n_test`` apply to sampled tasks (composition, system,
    limited tokens); binary tasks put every pair not in train into test.
    """

    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    task: TaskKind
    op: Op
    p: int = DEFAULT_P
    n_train: int = Field(ge=1)
    n_val: int = Field(default=DEFAULT_N_VAL, ge=0)
    n_test: int = Field(default=DEFAULT_N_TEST, ge=1)
    n_operands: int = BINARY_OPERANDS
    max_operand: int = Field(default=DEFAULT_MAX_OPERAND, ge=1)
    method: str = "baseline"
    seeds: list[int] = Field(min_length=1)
    train: TrainConfig = Field(default_factory=TrainConfig)
    model: ModelOverrides = Field(default_factory=ModelOverrides)
    transfer: TransferSpec | None = None
    output_dir: str | None = None

    @field_validator("p")
    @classmethod
    def validate_p(cls, v: int) -> int:
        """The modulus must be prime."""
        if not is_prime(v):
            msg = f"p={v} is not prime"
            raise ValueError(msg)
        return v

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: list[int]) -> list[int]:
        """Seeds must be distinct; each one owns a run directory."""
        if len(set(v)) != len(v):
            msg = f"seeds must be distinct, got {v}"
            raise ValueError(msg)
        return v

    @model_validator(mode="after")
    def check_task(self) -> Self:
        """Operand count, operation and transfer mode must suit the task."""
        if self.task is TaskKind.BINARY:
            if self.n_operands != BINARY_OPERANDS:
                msg = "binary tasks take exactly 2 operands"
                raise ValueError(msg)
        elif self.op not in GROUP_OPS:
            msg = f"{self.task} tasks need add or mul, got {self.op}"
            raise ValueError(msg)
        if self.task in (TaskKind.COMPOSITION, TaskKind.LIMITED_TOKENS) and not (
            MIN_COMPOSITION_OPERANDS <= self.n_operands <= MAX_COMPOSITION_OPERANDS
        ):
            msg = (
                f"compositions take {MIN_COMPOSITION_OPERANDS}.."
                f"{MAX_COMPOSITION_OPERANDS} operands, got {self.n_operands}"
            )
            raise ValueError(msg)
        if self.task is TaskKind.SYSTEM and self.n_operands != BINARY_OPERANDS:
            msg = "systems are built from a binary operation; leave n_operands at 2"
            raise ValueError(msg)
        if self.task is TaskKind.LIMITED_TOKENS and self.max_operand > self.p:
            msg = f"max_operand={self.max_operand} exceeds p={self.p}"
            raise ValueError(msg)
        if (
            self.transfer is not None
            and self.transfer.mode is TransferMode.HYBRID_EMBEDDING
            and self.task is not TaskKind.SYSTEM
        ):
            msg = "hybrid embedding transfer only applies to systems"
            raise ValueError(msg)
        return self

    @property
    def arity(self) -> int:
        """How many residues one example draws (3 for systems: a, b, c)."""
        return 3 if self.task is TaskKind.SYSTEM else self.n_operands


class DryRunReport(BaseModel):
    """What a run would build, without training."""

    name: str
    task: TaskKind
    operation: str
    p: int
    vocab_size: int
    seq_len: int
    parameter_count: int
    seeds: list[int]
    run_dirs: list[str]
    transfer_sources: list[str] = Field(default_factory=list)
    scale: Scale = Scale.PAPER
