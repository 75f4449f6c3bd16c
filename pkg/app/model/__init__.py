"""The decoder-only transformer and its checkpoint format."""

from app.model.checkpoint import (
    Checkpoint,
    CheckpointMeta,
    load_checkpoint,
    save_checkpoint,
    sidecar_path,
)
from app.model.schemas import ModelConfig
from app.model.transformer import EmbeddingStage, Model, init_model, parameter_layout

__all__ = [
    "Checkpoint",
    "CheckpointMeta",
    "EmbeddingStage",
    "Model",
    "ModelConfig",
    "init_model",
    "load_checkpoint",
    "parameter_layout",
    "save_checkpoint",
    "sidecar_path",
]
