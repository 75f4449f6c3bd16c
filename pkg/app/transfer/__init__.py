"""Weight transfer between models trained on related tasks."""

from app.transfer.schemas import TransferMode, TransferSpec, TransferSummary
from app.transfer.service import (
    apply_transfer,
    transfer_decoder,
    transfer_embedding,
    transfer_hybrid_embedding,
)

__all__ = [
    "TransferMode",
    "TransferSpec",
    "TransferSummary",
    "apply_transfer",
    "transfer_decoder",
    "transfer_embedding",
    "transfer_hybrid_embedding",
]
