"""Tests for AdamW, the training loop, evaluation and run records."""

from pathlib import Path
from typing import Any

import numpy as np
import pytest
from pydantic import ValidationError

from app.autodiff import Parameter
from app.core.exceptions import (
    ConfigMismatchError,
    ConfigParseError,
    DatasetError,
    FileError,
    ShapeMismatchError,
    VocabMismatchError,
)
from app.data.augment import augment_arrays
from app.data.schemas import Split
from app.model import Model, ModelConfig, init_model
from app.training import (
    AdamW,
    AdamWState,
    HistoryPoint,
    MetricsWriter,
    RunRecord,
    TrainConfig,
    adamw_step,
    detect_grokking,
    evaluate,
    find_run_records,
    read_metrics,
    read_run_record,
    train,
    write_run_record,
)
from tests.factories import RunRecordFactory

FAST = TrainConfig(batch_size=16, max_steps=6, eval_every=3)


def point(step: int, test_acc: float) -> HistoryPoint:
    return HistoryPoint(step=step, train_loss=1.0, train_acc=1.0, test_acc=test_acc)


class TestTrainConfig:
    """Tests for training configuration."""

    def test_defaults(self) -> None:
        """Test the default optimiser settings."""
        cfg = TrainConfig()
        assert cfg.batch_size == 1024
        assert cfg.lr == 1e-3
        assert cfg.weight_decay == 0.1
        assert cfg.betas == (0.9, 0.98)
        assert cfg.grok_threshold == 0.99

    def test_bad_betas(self) -> None:
        """Test betas must lie in [0, 1)."""
        with pytest.raises(ValidationError):
            TrainConfig(betas=(0.9, 1.0))

    def test_unknown_field(self) -> None:
        """Test unknown fields are refused."""
        with pytest.raises(ValidationError):
            TrainConfig.model_validate({"learning_rate": 0.1})


class TestAdamW:
    """Tests for the optimiser."""

    def test_first_step(self) -> None:
        """Test the bias-corrected first step moves by lr * sign(g) plus decay."""
        w = Parameter(np.array([1.0]), "w", dtype=np.float64)
        cfg = TrainConfig(lr=0.1, weight_decay=0.1)
        adamw_step([w], [np.array([0.5])], AdamWState(), cfg)
        assert w.data[0] == pytest.approx(1.0 - 0.01 - 0.1)

    def test_pure_decay_without_gradient_signal(self) -> None:
        """Test a zero gradient still applies decoupled weight decay."""
        w = Parameter(np.array([2.0]), "w", dtype=np.float64)
        adamw_step([w], [np.array([0.0])], AdamWState(), TrainConfig(lr=0.5, weight_decay=0.1))
        assert w.data[0] == pytest.approx(2.0 - 0.5 * 0.1 * 2.0)

    def test_frozen_untouched(self) -> None:
        """Test frozen parameters receive neither update nor decay."""
        w = Parameter(np.array([1.0, 2.0]), "w", dtype=np.float64)
        w.frozen = True
        state = AdamWState()
        adamw_step([w], [np.ones(2)], state, TrainConfig())
        assert w.data.tolist() == [1.0, 2.0]
        assert "w" not in state.m

    def test_row_mask(self) -> None:
        """Test rows outside the mask stay exactly fixed."""
        table = Parameter(np.ones((3, 2)), "table", dtype=np.float64)
        table.row_mask = np.array([False, True, False])
        adamw_step([table], [np.ones((3, 2))], AdamWState(), TrainConfig(lr=0.1))
        assert (table.data[[0, 2]] == 1.0).all()
        assert (table.data[1] < 1.0).all()

    def test_missing_gradient_skipped(self) -> None:
        """Test parameters without a gradient are skipped."""
        w = Parameter(np.array([1.0]), "w", dtype=np.float64)
        adamw_step([w], [None], AdamWState(), TrainConfig())
        assert w.data[0] == 1.0

    def test_shape_errors(self) -> None:
        """Test mismatched counts and shapes raise."""
        w = Parameter(np.zeros(2), "w")
        with pytest.raises(ShapeMismatchError):
            adamw_step([w], [], AdamWState(), TrainConfig())
        with pytest.raises(ShapeMismatchError):
            adamw_step([w], [np.zeros(3)], AdamWState(), TrainConfig())

    def test_wrapper_counts_steps(self) -> None:
        """Test the stateful wrapper feeds grads and counts steps."""
        w = Parameter(np.array([1.0]), "w", dtype=np.float64)
        opt = AdamW([w], TrainConfig(lr=0.1, weight_decay=0.0))
        w.grad = np.array([1.0])
        opt.step()
        opt.step()
        assert opt.state.step == 2
        opt.zero_grad()
        assert w.grad is None


class TestGrokDetection:
    """Tests for grokking detection."""

    def test_first_crossing(self) -> None:
        """Test the first evaluated step at or above the threshold is reported."""
        history = [point(100, 0.2), point(200, 0.99), point(300, 0.5), point(400, 1.0)]
        assert detect_grokking(history, 0.99) == 200

    def test_never(self) -> None:
        """Test no crossing gives None."""
        assert detect_grokking([point(100, 0.5)], 0.99) is None
        assert detect_grokking([], 0.99) is None


class TestEvaluate:
    """Tests for accuracy evaluation."""

    def test_empty(self, tiny_model: Model) -> None:
        """Test an empty set scores 0.0."""
        assert evaluate(tiny_model, []) == 0.0

    def test_independent_of_threads(self, tiny_model: Model, add_split: Split) -> None:
        """Test chunked multi-threaded evaluation matches the serial count."""
        serial = evaluate(tiny_model, add_split.test, chunk_size=1000, threads=1)
        parallel = evaluate(tiny_model, add_split.test, chunk_size=3, threads=4)
        assert serial == parallel
        assert 0.0 <= serial <= 1.0


class TestTrain:
    """Tests for the training loop."""

    def test_history(self, tiny_model: Model, add_split: Split) -> None:
        """Test evaluations happen every eval_every steps and at the end."""
        cfg = TrainConfig(batch_size=16, max_steps=7, eval_every=3)
        record = train(tiny_model, add_split, cfg)
        assert [h.step for h in record.history] == [3, 6, 7]
        assert record.operation == "x1+x2"
        assert record.task == "binary"
        assert record.n_train == 30
        assert record.p == 7
        assert record.config["train"]["max_steps"] == 7
        assert record.wall_time > 0

    def test_deterministic(self, tiny_config: ModelConfig, add_split: Split) -> None:
        """Test the same seeds reproduce the same history."""
        a = train(init_model(tiny_config, 0), add_split, FAST)
        b = train(init_model(tiny_config, 0), add_split, FAST)
        assert a.history == b.history

    def test_loss_decreases(self, tiny_model: Model, add_split: Split) -> None:
        """Test the optimiser reduces the training loss."""
        cfg = TrainConfig(batch_size=30, max_steps=100, eval_every=10, lr=1e-2)
        record = train(tiny_model, add_split, cfg)
        assert record.history[-1].train_loss < record.history[0].train_loss

    def test_frozen_and_masked_stay_fixed(self, tiny_model: Model, add_split: Split) -> None:
        """Test frozen parameters and masked rows do not change."""
        tiny_model.set_frozen("decoder.", frozen=True)
        table = tiny_model["embedding.token_table"]
        table.row_mask = np.arange(table.shape[0]) >= 7
        before_decoder = tiny_model["decoder.0.attn.wq"].data.copy()
        before_rows = table.data[:7].copy()
        before_free = table.data[7:].copy()
        train(tiny_model, add_split, FAST)
        np.testing.assert_array_equal(tiny_model["decoder.0.attn.wq"].data, before_decoder)
        np.testing.assert_array_equal(table.data[:7], before_rows)
        assert not np.array_equal(table.data[7:], before_free)

    def test_metrics_and_checkpoints(self, tmp_path: Path, tiny_model: Model, add_split: Split) -> None:
        """Test history rows reach the CSV sink and the checkpoint hook fires."""
        cfg = TrainConfig(batch_size=16, max_steps=6, eval_every=3, checkpoint_every=2)
        seen: list[int] = []
        with MetricsWriter(tmp_path / "metrics.csv") as sink:
            record = train(tiny_model, add_split, cfg, metrics=sink, on_checkpoint=lambda s, _: seen.append(s))
        assert seen == [2, 4, 6]
        assert read_metrics(tmp_path / "metrics.csv") == record.history

    def test_commutative_augmentation(
        self, monkeypatch: pytest.MonkeyPatch, tiny_model: Model, add_split: Split
    ) -> None:
        """Test augmented batches are swap-closed and never contain a held-out pair."""
        batches: list[np.ndarray] = []

        def capture(*args: Any) -> tuple[np.ndarray, np.ndarray]:
            tokens, targets = augment_arrays(*args)
            batches.append(tokens)
            return tokens, targets

        monkeypatch.setattr("app.training.service.augment_arrays", capture)
        cfg = TrainConfig(batch_size=16, max_steps=4, eval_every=4, augment_commutative=True)
        record = train(
            tiny_model,
            add_split,
            cfg,
            RunRecord(operation="x1+x2", task="binary", n_train=30, method="+CA", seed=0, p=7),
        )

        held_out = {e.operands for e in add_split.test}
        assert record.method == "+CA"
        assert len(batches) == 4
        for tokens in batches:
            pairs = {(int(r[0]), int(r[2])) for r in tokens}
            assert not pairs & held_out
            assert all((b, a) in pairs or (b, a) in held_out for a, b in pairs)
        assert any(len(tokens) > 16 for tokens in batches)

    def test_empty_train_set(self, tiny_model: Model, add_split: Split) -> None:
        """Test training needs examples."""
        empty = Split(train=[], test=add_split.test, seed=0, p=7)
        with pytest.raises(DatasetError):
            train(tiny_model, empty, FAST)

    def test_vocab_too_small(self, add_split: Split) -> None:
        """Test a model whose vocabulary misses dataset tokens is refused."""
        cfg = ModelConfig(vocab_size=5, d_model=8, n_heads=2, n_layers=1, embed_mlp_depth=0, max_seq_len=4, classifier_hidden=8)
        with pytest.raises(VocabMismatchError):
            train(init_model(cfg, 0), add_split, FAST)

    def test_sequence_too_long(self, add_split: Split, tiny_config: ModelConfig) -> None:
        """Test prompts longer than the model context are refused."""
        cfg = tiny_config.model_copy(update={"max_seq_len": 2})
        with pytest.raises(ConfigMismatchError):
            train(init_model(cfg, 0), add_split, FAST)


class TestRunRecords:
    """Tests for run record validation and persistence."""

    def test_steps_must_increase(self) -> None:
        """Test history steps are strictly increasing."""
        with pytest.raises(ValidationError):
            RunRecord(operation="x1+x2", task="binary", n_train=1, seed=0, p=7, history=[point(2, 0.0), point(2, 0.0)])

    def test_grok_step_must_be_evaluated(self) -> None:
        """Test grok_step refers to an evaluated step."""
        with pytest.raises(ValidationError):
            RunRecord(operation="x1+x2", task="binary", n_train=1, seed=0, p=7, history=[point(2, 1.0)], grok_step=3)

    def test_round_trip(self, tmp_path: Path) -> None:
        """Test a record survives JSON persistence."""
        record = RunRecordFactory.create_data(grok_step=200)
        path = write_run_record(tmp_path / "a" / "run_record.json", record)
        assert read_run_record(path) == record
        assert record.grokked

    def test_find(self, tmp_path: Path) -> None:
        """Test records are found recursively in sorted order."""
        for name in ("b", "a"):
            write_run_record(tmp_path / name / "seed_0" / "run_record.json", RunRecordFactory.create_data())
        found = find_run_records(tmp_path)
        assert [p.parent.parent.name for p in found] == ["a", "b"]

    def test_missing(self, tmp_path: Path) -> None:
        """Test missing files and directories raise FileError."""
        with pytest.raises(FileError):
            read_run_record(tmp_path / "run_record.json")
        with pytest.raises(FileError):
            find_run_records(tmp_path / "nowhere")
        with pytest.raises(FileError):
            read_metrics(tmp_path / "metrics.csv")

    def test_invalid(self, tmp_path: Path) -> None:
        """Test an invalid record raises ConfigParseError."""
        path = tmp_path / "run_record.json"
        path.write_text('{"operation": 1}', encoding="utf-8")
        with pytest.raises(ConfigParseError):
            read_run_record(path)
