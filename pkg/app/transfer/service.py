"""Decoder-block, embedding and hybrid-embedding weight transfer.

The classifier is never copied: the output decoder is specific to the
operation being learnt.
"""

import logging
from collections.abc import Iterable
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from app.core.exceptions import ConfigMismatchError, VocabMismatchError
from app.core.logging import get_logger, log_with_context
from app.data.vocab import Vocab
from app.model.checkpoint import Checkpoint, load_checkpoint
from app.model.transformer import Model
from app.transfer.schemas import TransferMode, TransferSpec, TransferSummary

logger = get_logger(__name__)

TOKEN_TABLE = "embedding.token_table"
POS_TABLE = "embedding.pos_table"
EMBED_MLP = "embedding.mlp."
DECODER = "decoder."


def _require_same(src: Checkpoint, dst: Model, fields: Iterable[str]) -> None:
    mismatched = {
        f: {"source": getattr(src.meta.model, f), "target": getattr(dst.config, f)}
        for f in fields
        if getattr(src.meta.model, f) != getattr(dst.config, f)
    }
    if mismatched:
        raise ConfigMismatchError(
            f"source {src.path} and target model disagree on {', '.join(mismatched)}",
            details={"path": str(src.path), "mismatched": mismatched},
        )


def _copy(src: Checkpoint, dst: Model, name: str) -> None:
    source = src.tensors[name]
    param = dst[name]
    if source.shape != param.shape:
        raise ConfigMismatchError(
            f"{name}: source shape {source.shape} does not fit {param.shape}",
            details={
                "param": name,
                "source": list(source.shape),
                "target": list(param.shape),
            },
        )
    np.copyto(param.data, source)
    param.zero_grad()


def _freeze_rows(dst: Model, name: str, copied: NDArray[np.bool_]) -> None:
    """Fix the copied rows of a table, leaving the rest trainable."""
    param = dst[name]
    if copied.all():
        param.frozen = True
        param.row_mask = None
    else:
        param.frozen = False
        param.row_mask = ~copied


def transfer_decoder(src: Checkpoint, dst: Model, freeze: bool = True) -> Model:
    """Copy every decoder block from ``src`` into ``dst``.

    The embedding stack and classifier keep their fresh initialisation.

    Raises:
        ConfigMismatchError: If width, head count or depth differ.
    """
    _require_same(src, dst, ("d_model", "n_heads", "n_layers"))
    names = [name for name, _ in dst.named_parameters() if name.startswith(DECODER)]
    for name in names:
        _copy(src, dst, name)
    if names:
        dst.set_frozen(DECODER, freeze)
    log_with_context(
        logger, logging.INFO, "Transferred decoder blocks",
        source=src.path, tensors=len(names), frozen=freeze,
    )
    return dst


def _shared_token_rows(src: Checkpoint, vocab: Vocab) -> list[tuple[int, int]]:
    if src.meta.p != vocab.p:
        raise VocabMismatchError(
            f"source was trained over Z_{src.meta.p}, target uses Z_{vocab.p}",
            details={"source_p": src.meta.p, "target_p": vocab.p},
        )
    src_ids = {token: i for i, token in enumerate(src.meta.tokens)}
    if [src.meta.tokens[i] for i in range(vocab.p)] != list(vocab.tokens[: vocab.p]):
        raise VocabMismatchError(
            "numeral tokens differ between source and target",
            details={"path": str(src.path)},
        )
    return [
        (src_ids[token], i) for i, token in enumerate(vocab.tokens) if token in src_ids
    ]


def _transfer_embedding_stack(
    src: Checkpoint, dst: Model, vocab: Vocab, freeze: bool
) -> TransferSummary:
    _require_same(src, dst, ("d_model", "embed_mlp_depth"))
    if len(src.meta.tokens) != src.meta.model.vocab_size:
        raise VocabMismatchError(
            f"checkpoint {src.path} lists {len(src.meta.tokens)} tokens for a "
            f"{src.meta.model.vocab_size}-row table",
            details={"path": str(src.path)},
        )
    pairs = _shared_token_rows(src, vocab)
    table = dst[TOKEN_TABLE]
    copied_rows = np.zeros(table.shape[0], dtype=bool)
    source_table = src.tensors[TOKEN_TABLE]
    for src_id, dst_id in pairs:
        table.data[dst_id] = source_table[src_id]
        copied_rows[dst_id] = True

    pos = dst[POS_TABLE]
    source_pos = src.tensors[POS_TABLE]
    overlap = min(source_pos.shape[0], pos.shape[0])
    pos.data[:overlap] = source_pos[:overlap]
    copied_pos = np.zeros(pos.shape[0], dtype=bool)
    copied_pos[:overlap] = True

    mlp = [name for name, _ in dst.named_parameters() if name.startswith(EMBED_MLP)]
    for name in mlp:
        _copy(src, dst, name)
    dst.zero_grad()

    if freeze:
        _freeze_rows(dst, TOKEN_TABLE, copied_rows)
        _freeze_rows(dst, POS_TABLE, copied_pos)
        if mlp:
            dst.set_frozen(EMBED_MLP, True)
    return TransferSummary(
        mode=TransferMode.EMBEDDING,
        source_checkpoint=str(src.path),
        freeze_transferred=freeze,
        tensors=[TOKEN_TABLE, POS_TABLE, *mlp],
        token_rows=int(copied_rows.sum()),
        position_rows=overlap,
        trainable_token_rows=int((~copied_rows).sum()) if freeze else table.shape[0],
    )


def _transfer_embedding(
    src: Checkpoint, dst: Model, vocab: Vocab, freeze: bool
) -> TransferSummary:
    summary = _transfer_embedding_stack(src, dst, vocab, freeze)
    log_with_context(
        logger, logging.INFO, "Transferred embedding",
        source=src.path, token_rows=summary.token_rows,
        position_rows=summary.position_rows, frozen=freeze,
    )
    return summary


def transfer_embedding(
    src: Checkpoint, dst: Model, vocab: Vocab, freeze: bool = True
) -> Model:
    """Copy token rows, positional rows and the embedding MLP from ``src``.

    Token rows are matched by token string, so numerals map onto themselves
    and ``=`` or an operator symbol is copied when both vocabularies have it.
    Positions beyond the source ``max_seq_len`` stay freshly initialised and
    trainable.

    Raises:
        VocabMismatchError: If the moduli or numeral tokens differ.
        ConfigMismatchError: If width or MLP depth differ.
    """
    _transfer_embedding(src, dst, vocab, freeze)
    return dst


def _check_superset(src: Checkpoint, vocab: Vocab) -> None:
    missing = sorted(set(src.meta.tokens) - set(vocab.tokens))
    if missing:
        raise VocabMismatchError(
            f"target vocabulary lacks source tokens {missing}",
            details={"path": str(src.path), "missing": missing},
        )


def _transfer_hybrid(src: Checkpoint, dst: Model, vocab: Vocab) -> TransferSummary:
    _check_superset(src, vocab)
    summary = _transfer_embedding_stack(src, dst, vocab, freeze=True)
    log_with_context(
        logger, logging.INFO, "Transferred hybrid embedding",
        source=src.path, frozen_rows=summary.token_rows,
        trainable_rows=summary.trainable_token_rows,
    )
    return summary.model_copy(update={"mode": TransferMode.HYBRID_EMBEDDING})


def transfer_hybrid_embedding(src: Checkpoint, dst: Model, vocab: Vocab) -> Model:
    """Embedding transfer for a vocabulary that extends the source one.

    Rows the source knows are copied and frozen; rows for new tokens
    (``A``, ``B``, ``&``, ``?``) keep their initialisation and stay trainable.

    Raises:
        VocabMismatchError: If the source has tokens the target lacks.
    """
    _transfer_hybrid(src, dst, vocab)
    return dst


def apply_transfer(spec: TransferSpec, dst: Model, vocab: Vocab) -> TransferSummary:
    """Load ``spec.source_checkpoint`` and run the transfer it names.

    Raises:
        FileError: If the checkpoint or its sidecar is missing.
    """
    src = load_checkpoint(Path(spec.source_checkpoint))
    match spec.mode:
        case TransferMode.DECODER_BLOCK:
            transfer_decoder(src, dst, spec.freeze_transferred)
            summary = TransferSummary(
                mode=spec.mode,
                source_checkpoint=str(src.path),
                freeze_transferred=spec.freeze_transferred,
                tensors=[
                    name
                    for name, _ in dst.named_parameters()
                    if name.startswith(DECODER)
                ],
            )
        case TransferMode.EMBEDDING:
            summary = _transfer_embedding(src, dst, vocab, spec.freeze_transferred)
        case TransferMode.HYBRID_EMBEDDING:
            summary = _transfer_hybrid(src, dst, vocab)
    return summary
