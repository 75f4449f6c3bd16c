"""Examples, splits and task tags."""

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel


class TaskKind(StrEnum):
    """The four task families."""

    BINARY = "binary"
    COMPOSITION = "composition"
    SYSTEM = "system"
    LIMITED_TOKENS = "limited_tokens"


@dataclass(frozen=True, slots=True)
class Example:
    """One prompt and the numeral token it should be answered with.

    ``operands`` are the residues the prompt was built from; for systems
    they are ``(a, b, c)``.
    """

    tokens: tuple[int, ...]
    target: int
    task: str
    operands: tuple[int, ...]

    @property
    def key(self) -> tuple[str, tuple[int, ...]]:
        """Identity of the underlying question, used for disjointness checks."""
        return self.task, self.operands


@dataclass(slots=True)
class Split:
    """Train/test examples (and a validation set for sampled tasks)."""

    train: list[Example]
    test: list[Example]
    seed: int
    p: int
    val: list[Example] = field(default_factory=list)

    @property
    def eval_set(self) -> list[Example]:
        """Where grokking is watched during training: val if present, else test."""
        return self.val or self.test

    def sizes(self) -> dict[str, int]:
        return {"train": len(self.train), "val": len(self.val), "test": len(self.test)}


class ExampleRecord(BaseModel):
    """One line of a JSON-lines dataset file."""

    tokens: list[int]
    target: int
    task: str


def stack(examples: Sequence[Example]) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Token matrix ``[N, T]`` and target vector ``[N]``; prompts share one length."""
    if not examples:
        return np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64)
    tokens = np.array([e.tokens for e in examples], dtype=np.int64)
    targets = np.array([e.target for e in examples], dtype=np.int64)
    return tokens, targets
