"""GROKCKPT binary checkpoints with a JSON sidecar.

Layout (all integers unsigned 32-bit little-endian)::

    b"GROKCKPT" | version | tensor count
    per tensor: name length | UTF-8 name | rank | dims... | float32 LE data

The sidecar ``<stem>.json`` holds the model config, the modulus and the
vocabulary token strings in id order.
"""

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ValidationError

from app.autodiff.tensor import Parameter
from app.core.exceptions import ConfigParseError, FileError
from app.model.schemas import ModelConfig
from app.model.transformer import Model, parameter_layout

logger = logging.getLogger(__name__)

MAGIC = b"GROKCKPT"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")


class CheckpointMeta(BaseModel):
    """Contents of the JSON sidecar."""

    format: str = MAGIC.decode()
    version: int = FORMAT_VERSION
    model: ModelConfig
    p: int
    tokens: list[str]


@dataclass(frozen=True, slots=True)
class Checkpoint:
    """A loaded checkpoint: sidecar metadata plus named float32 tensors."""

    meta: CheckpointMeta
    tensors: dict[str, NDArray[np.float32]]
    path: Path

    def build_model(self) -> Model:
        """Materialise a trainable :class:`Model` from the stored tensors."""
        layout = parameter_layout(self.meta.model)
        missing = [name for name, _, _ in layout if name not in self.tensors]
        if missing:
            raise FileError(
                f"checkpoint {self.path} lacks {len(missing)} model tensors",
                details={"path": str(self.path), "missing": missing[:10]},
            )
        params = {
            name: Parameter(self.tensors[name].copy(), name) for name, _, _ in layout
        }
        return Model(self.meta.model, params)


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def _write_u32(f: BinaryIO, *values: int) -> None:
    for v in values:
        f.write(_U32.pack(v))


def save_checkpoint(path: Path, model: Model, p: int, tokens: list[str]) -> Path:
    """Write ``model`` to ``path`` and its sidecar next to it.

    Returns:
        The checkpoint path.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    named = model.named_parameters()
    with path.open("wb") as f:
        f.write(MAGIC)
        _write_u32(f, FORMAT_VERSION, len(named))
        for name, param in named:
            encoded = name.encode("utf-8")
            _write_u32(f, len(encoded))
            f.write(encoded)
            _write_u32(f, param.ndim, *param.shape)
            f.write(np.ascontiguousarray(param.data, dtype="<f4").tobytes())
    meta = CheckpointMeta(model=model.config, p=p, tokens=tokens)
    sidecar_path(path).write_text(meta.model_dump_json(indent=2), encoding="utf-8")
    logger.info("Wrote checkpoint %s (%d tensors)", path, len(named))
    return path


class _Reader:
    def __init__(self, buf: bytes, path: Path) -> None:
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FileError(
                f"checkpoint {self.path} is truncated", details={"path": str(self.path)}
            )
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return int(_U32.unpack(self.take(_U32.size))[0])


def read_tensors(path: Path) -> dict[str, NDArray[np.float32]]:
    """Parse the binary part of a checkpoint."""
    if not path.is_file():
        raise FileError(f"checkpoint not found: {path}", details={"path": str(path)})
    reader = _Reader(path.read_bytes(), path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise FileError(f"{path} is not a GROKCKPT file", details={"path": str(path)})
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise FileError(
            f"unsupported checkpoint version {version}",
            details={"path": str(path), "version": version},
        )
    tensors: dict[str, NDArray[np.float32]] = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8")
        rank = reader.u32()
        shape = tuple(reader.u32() for _ in range(rank))
        count = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(reader.take(4 * count), dtype="<f4")
        tensors[name] = data.astype(np.float32).reshape(shape)
    return tensors


def load_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint and its sidecar."""
    tensors = read_tensors(path)
    side = sidecar_path(path)
    if not side.is_file():
        raise FileError(
            f"checkpoint sidecar not found: {side}", details={"path": str(side)}
        )
    try:
        raw = json.loads(side.read_text(encoding="utf-8"))
        meta = CheckpointMeta.model_validate(raw)
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigParseError(
            f"invalid checkpoint sidecar {side}: {e}", details={"path": str(side)}
        ) from e
    logger.debug("Loaded checkpoint %s", path)
    return Checkpoint(meta=meta, tensors=tensors, path=path)
