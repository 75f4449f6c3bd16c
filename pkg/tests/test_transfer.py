"""Tests for decoder-block, embedding and hybrid-embedding transfer."""

from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import ConfigMismatchError, FileError, VocabMismatchError
from app.data.vocab import Vocab, build_vocab
from app.groups import Op
from app.model import Checkpoint, Model, ModelConfig, init_model, load_checkpoint, save_checkpoint
from app.transfer import (
    TransferMode,
    TransferSpec,
    apply_transfer,
    transfer_decoder,
    transfer_embedding,
    transfer_hybrid_embedding,
)

P = 7


def config_for(vocab: Vocab, max_seq_len: int, **overrides: int) -> ModelConfig:
    data = {
        "vocab_size": vocab.size,
        "d_model": 8,
        "n_heads": 2,
        "n_layers": 1,
        "embed_mlp_depth": 1,
        "max_seq_len": max_seq_len,
        "classifier_hidden": 8,
        **overrides,
    }
    return ModelConfig.model_validate(data)


@pytest.fixture
def source_path(tmp_path: Path, tiny_model: Model, add_vocab: Vocab) -> Path:
    """A saved addition model over Z_7 with 4-token prompts."""
    return save_checkpoint(tmp_path / "source" / "model.ckpt", tiny_model, P, list(add_vocab.tokens))


@pytest.fixture
def source(source_path: Path) -> Checkpoint:
    return load_checkpoint(source_path)


class TestDecoderTransfer:
    """Tests for copying decoder blocks."""

    def test_copies_and_freezes(self, source: Checkpoint) -> None:
        """Test decoder weights are copied and frozen; the rest stays fresh."""
        vocab = build_vocab(P, [Op.MUL])
        dst = init_model(config_for(vocab, 4), seed=9)
        classifier_before = dst["classifier.w1"].data.copy()
        transfer_decoder(source, dst)
        for name, param in dst.named_parameters():
            if name.startswith("decoder."):
                np.testing.assert_array_equal(param.data, source.tensors[name])
                assert param.frozen
            else:
                assert not param.frozen
        np.testing.assert_array_equal(dst["classifier.w1"].data, classifier_before)
        assert not np.array_equal(dst["embedding.token_table"].data[:P], source.tensors["embedding.token_table"][:P])

    def test_unfrozen(self, source: Checkpoint, add_vocab: Vocab) -> None:
        """Test freezing can be switched off."""
        dst = transfer_decoder(source, init_model(config_for(add_vocab, 4), 1), freeze=False)
        assert not any(p.frozen for p in dst.matching("decoder."))

    def test_depth_mismatch(self, source: Checkpoint, add_vocab: Vocab) -> None:
        """Test a different number of blocks is refused."""
        dst = init_model(config_for(add_vocab, 4, n_layers=2), 0)
        with pytest.raises(ConfigMismatchError):
            transfer_decoder(source, dst)

    def test_width_mismatch(self, source: Checkpoint, add_vocab: Vocab) -> None:
        """Test a different width is refused."""
        dst = init_model(config_for(add_vocab, 4, d_model=12, n_heads=2), 0)
        with pytest.raises(ConfigMismatchError):
            transfer_decoder(source, dst)


class TestEmbeddingTransfer:
    """Tests for copying the embedding stack."""

    def test_longer_prompts(self, source: Checkpoint, add_vocab: Vocab) -> None:
        """Test token rows freeze fully and only the overlapping positions freeze."""
        dst = init_model(config_for(add_vocab, 6), seed=5)
        transfer_embedding(source, dst, add_vocab)
        table = dst["embedding.token_table"]
        np.testing.assert_array_equal(table.data, source.tensors["embedding.token_table"])
        assert table.frozen
        pos = dst["embedding.pos_table"]
        np.testing.assert_array_equal(pos.data[:4], source.tensors["embedding.pos_table"])
        assert not pos.frozen
        assert pos.trainable_rows.tolist() == [False, False, False, False, True, True]
        assert dst["embedding.mlp.0.weight"].frozen
        assert not dst["decoder.0.attn.wq"].frozen

    def test_rows_matched_by_token(self, source: Checkpoint, add_vocab: Vocab) -> None:
        """Test shared symbols map by string, unknown ones stay fresh."""
        vocab = build_vocab(P, [Op.MUL, Op.ADD])
        dst = init_model(config_for(vocab, 4), seed=2)
        star_before = dst["embedding.token_table"].data[vocab.id("*")].copy()
        transfer_embedding(source, dst, vocab)
        table = dst["embedding.token_table"].data
        src_table = source.tensors["embedding.token_table"]
        np.testing.assert_array_equal(table[vocab.id("+")], src_table[add_vocab.id("+")])
        np.testing.assert_array_equal(table[vocab.id("=")], src_table[add_vocab.id("=")])
        np.testing.assert_array_equal(table[vocab.id("*")], star_before)
        assert dst["embedding.token_table"].trainable_rows.tolist() == [
            token == "*" for token in vocab.tokens
        ]

    def test_not_frozen(self, source: Checkpoint, add_vocab: Vocab) -> None:
        """Test copied rows may stay trainable."""
        dst = init_model(config_for(add_vocab, 6), 0)
        transfer_embedding(source, dst, add_vocab, freeze=False)
        assert not any(p.frozen for p in dst.parameters())
        assert dst["embedding.token_table"].row_mask is None

    def test_modulus_mismatch(self, source: Checkpoint) -> None:
        """Test embeddings do not transfer across moduli."""
        vocab = build_vocab(11, [Op.ADD])
        dst = init_model(config_for(vocab, 4), 0)
        with pytest.raises(VocabMismatchError):
            transfer_embedding(source, dst, vocab)

    def test_mlp_depth_mismatch(self, source: Checkpoint, add_vocab: Vocab) -> None:
        """Test the embedding MLP depth must agree."""
        dst = init_model(config_for(add_vocab, 4, embed_mlp_depth=2), 0)
        with pytest.raises(ConfigMismatchError):
            transfer_embedding(source, dst, add_vocab)


class TestHybridTransfer:
    """Tests for transfer into a vocabulary that extends the source."""

    def test_new_tokens_trainable(self, source: Checkpoint, add_vocab: Vocab) -> None:
        """Test known rows are frozen and the system tokens stay trainable."""
        vocab = build_vocab(P, [Op.ADD], system=True)
        dst = init_model(config_for(vocab, 13), 3)
        transfer_hybrid_embedding(source, dst, vocab)
        table = dst["embedding.token_table"]
        trainable = {vocab.token(i) for i in np.flatnonzero(table.trainable_rows)}
        assert trainable == {"&", "?", "A", "B"}
        for token in add_vocab.tokens:
            np.testing.assert_array_equal(
                table.data[vocab.id(token)],
                source.tensors["embedding.token_table"][add_vocab.id(token)],
            )

    def test_missing_source_tokens(self, tmp_path: Path) -> None:
        """Test a source token absent from the target vocabulary is refused."""
        src_vocab = build_vocab(P, [Op.MUL])
        path = save_checkpoint(tmp_path / "mul.ckpt", init_model(config_for(src_vocab, 4), 0), P, list(src_vocab.tokens))
        vocab = build_vocab(P, [Op.ADD], system=True)
        with pytest.raises(VocabMismatchError, match=r"\*"):
            transfer_hybrid_embedding(load_checkpoint(path), init_model(config_for(vocab, 13), 0), vocab)


class TestApplyTransfer:
    """Tests for apply_transfer."""

    def test_decoder_summary(self, source_path: Path, add_vocab: Vocab) -> None:
        """Test the decoder summary lists the copied tensors."""
        spec = TransferSpec(mode=TransferMode.DECODER_BLOCK, source_checkpoint=str(source_path))
        dst = init_model(config_for(add_vocab, 4), 1)
        summary = apply_transfer(spec, dst, add_vocab)
        assert summary.mode is TransferMode.DECODER_BLOCK
        assert summary.tensors
        assert all(name.startswith("decoder.") for name in summary.tensors)

    def test_embedding_summary(self, source_path: Path, add_vocab: Vocab) -> None:
        """Test the embedding summary counts rows."""
        spec = TransferSpec(mode=TransferMode.EMBEDDING, source_checkpoint=str(source_path))
        summary = apply_transfer(spec, init_model(config_for(add_vocab, 6), 1), add_vocab)
        assert (summary.token_rows, summary.position_rows) == (add_vocab.size, 4)
        assert summary.trainable_token_rows == 0

    def test_hybrid_summary(self, source_path: Path) -> None:
        """Test hybrid mode always freezes and reports trainable rows."""
        vocab = build_vocab(P, [Op.ADD], system=True)
        spec = TransferSpec(mode="hybrid_embedding", source_checkpoint=str(source_path), freeze_transferred=False)
        summary = apply_transfer(spec, init_model(config_for(vocab, 13), 1), vocab)
        assert summary.mode is TransferMode.HYBRID_EMBEDDING
        assert summary.freeze_transferred
        assert summary.trainable_token_rows == 4

    def test_missing_checkpoint(self, tmp_path: Path, add_vocab: Vocab) -> None:
        """Test a missing source raises FileError."""
        spec = TransferSpec(mode=TransferMode.EMBEDDING, source_checkpoint=str(tmp_path / "none.ckpt"))
        with pytest.raises(FileError):
            apply_transfer(spec, init_model(config_for(add_vocab, 4), 0), add_vocab)

    def test_spec_validation(self) -> None:
        """Test unknown modes and empty paths are refused."""
        with pytest.raises(ValidationError):
            TransferSpec(mode="classifier", source_checkpoint="x")
        with pytest.raises(ValidationError):
            TransferSpec(mode=TransferMode.EMBEDDING, source_checkpoint="")
