"""JSON-lines dataset export and validated import."""

import json
import logging
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from app.core.exceptions import DatasetError, FileError, GrokLabError
from app.data.generators import label, operands_from_tokens
from app.data.schemas import Example, ExampleRecord, Split
from app.data.vocab import Vocab

logger = logging.getLogger(__name__)


def write_jsonl(path: Path, examples: Sequence[Example]) -> Path:
    """Write one ``{"tokens", "target", "task"}`` object per line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for e in examples:
            record = ExampleRecord(tokens=list(e.tokens), target=e.target, task=e.task)
            f.write(record.model_dump_json() + "\n")
    return path


def read_jsonl(path: Path, p: int) -> list[Example]:
    """Load a dataset file, re-deriving every label from its tokens.

    Raises:
        FileError: If the file does not exist.
        DatasetError: If a line is malformed or its target disagrees with group_core.
    """
    if not path.is_file():
        raise FileError(f"dataset not found: {path}", details={"path": str(path)})
    examples: list[Example] = []
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            where = {"path": str(path), "line": lineno}
            try:
                record = ExampleRecord.model_validate_json(line)
                operands = operands_from_tokens(record.task, record.tokens)
                expected = label(record.task, operands, p)
            except ValidationError as e:
                raise DatasetError(f"{path}:{lineno}: {e}", details=where) from e
            except (GrokLabError, IndexError, ValueError) as e:
                raise DatasetError(
                    f"{path}:{lineno}: cannot evaluate prompt", details=where
                ) from e
            if expected != record.target:
                raise DatasetError(
                    f"{path}:{lineno}: target {record.target} "
                    f"but the prompt evaluates to {expected}",
                    details={**where, "target": record.target, "expected": expected},
                )
            examples.append(
                Example(
                    tokens=tuple(record.tokens),
                    target=record.target,
                    task=record.task,
                    operands=tuple(operands),
                )
            )
    logger.debug("Read %d examples from %s", len(examples), path)
    return examples


def write_split(directory: Path, split: Split, vocab: Vocab) -> list[Path]:
    """Write ``train``/``val``/``test`` JSON-lines files plus ``vocab.json``."""
    directory.mkdir(parents=True, exist_ok=True)
    written = [write_jsonl(directory / "train.jsonl", split.train)]
    if split.val:
        written.append(write_jsonl(directory / "val.jsonl", split.val))
    written.append(write_jsonl(directory / "test.jsonl", split.test))
    vocab_path = directory / "vocab.json"
    meta = {"p": vocab.p, "tokens": list(vocab.tokens), "seed": split.seed}
    vocab_path.write_text(json.dumps(meta, indent=2), encoding="utf-8")
    written.append(vocab_path)
    logger.info("Wrote dataset to %s: %s", directory, split.sizes())
    return written


def read_split(directory: Path) -> tuple[Split, Vocab]:
    """Inverse of :func:`write_split`, with label re-validation."""
    vocab_path = directory / "vocab.json"
    if not vocab_path.is_file():
        raise FileError(
            f"vocabulary not found: {vocab_path}", details={"path": str(vocab_path)}
        )
    meta = json.loads(vocab_path.read_text(encoding="utf-8"))
    vocab = Vocab(int(meta["p"]), tuple(meta["tokens"]))
    val_path = directory / "val.jsonl"
    split = Split(
        train=read_jsonl(directory / "train.jsonl", vocab.p),
        test=read_jsonl(directory / "test.jsonl", vocab.p),
        val=read_jsonl(val_path, vocab.p) if val_path.is_file() else [],
        seed=int(meta.get("seed", 0)),
        p=vocab.p,
    )
    return split, vocab
