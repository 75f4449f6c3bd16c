"""Tokenisation, task generators, splits and augmentation."""

from app.data.augment import augment_arrays, augment_commutative
from app.data.generators import (
    gen_binary,
    gen_composition,
    gen_limited,
    gen_system,
    is_swap_closed,
    label,
    limit_tokens,
)
from app.data.io import read_jsonl, read_split, write_jsonl, write_split
from app.data.schemas import Example, Split, TaskKind, stack
from app.data.vocab import Special, Vocab, build_vocab

__all__ = [
    "Example",
    "Special",
    "Split",
    "TaskKind",
    "Vocab",
    "augment_arrays",
    "augment_commutative",
    "build_vocab",
    "gen_binary",
    "gen_composition",
    "gen_limited",
    "gen_system",
    "is_swap_closed",
    "label",
    "limit_tokens",
    "read_jsonl",
    "read_split",
    "stack",
    "write_jsonl",
    "write_split",
]
