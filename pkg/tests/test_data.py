"""Tests for vocabularies, task generators, augmentation and dataset files."""

import json
from pathlib import Path

import numpy as np
import pytest

from app.core.exceptions import (
    ConfigError,
    DatasetError,
    EmptyAfterFilterError,
    FileError,
    NonAssociativeOpError,
    NotCommutativeError,
    SwapClosedError,
    TooFewPairsError,
    VocabMismatchError,
)
from app.data import (
    Special,
    Split,
    Vocab,
    augment_arrays,
    augment_commutative,
    build_vocab,
    gen_binary,
    gen_composition,
    gen_limited,
    gen_system,
    is_swap_closed,
    label,
    limit_tokens,
    read_jsonl,
    read_split,
    stack,
    write_jsonl,
    write_split,
)
from app.data.generators import binary_example, parse_task, system_task
from app.groups import Op, TemplateId, eval_composition, eval_op

P = 7


class TestVocab:
    """Tests for token vocabularies."""

    def test_layout(self) -> None:
        """Test numerals come first, then ops, =, and <pad>."""
        vocab = build_vocab(P, [Op.ADD, Op.MUL])
        assert vocab.tokens == ("0", "1", "2", "3", "4", "5", "6", "+", "*", "=", "<pad>")
        assert vocab.size == len(vocab) == 11
        assert vocab.id(3) == 3
        assert vocab.op_id(Op.MUL) == 8
        assert vocab.is_numeral(6)
        assert not vocab.is_numeral(7)

    def test_system_tokens(self) -> None:
        """Test system vocabularies carry & ? A B before <pad>."""
        vocab = build_vocab(P, [Op.ADD], system=True)
        assert vocab.tokens[P:] == ("+", "=", "&", "?", "A", "B", "<pad>")

    def test_duplicate_ops_collapse(self) -> None:
        """Test repeated ops get one symbol."""
        assert build_vocab(P, [Op.ADD, Op.ADD]).size == P + 3

    def test_encode_decode(self) -> None:
        """Test encoding and decoding are inverse."""
        vocab = build_vocab(P, [Op.SUB])
        ids = vocab.encode([3, "-", 4, "="])
        assert ids == [3, 7, 4, 8]
        assert vocab.decode(ids) == ["3", "-", "4", "="]
        assert Special.EQ in vocab

    def test_unknown_token(self) -> None:
        """Test unknown tokens raise VocabMismatchError."""
        with pytest.raises(VocabMismatchError):
            build_vocab(P, [Op.ADD]).id("*")

    def test_numerals_must_lead(self) -> None:
        """Test a vocabulary must start with the numerals."""
        with pytest.raises(VocabMismatchError):
            Vocab(2, ("1", "0", "="))

    def test_tokens_unique(self) -> None:
        """Test duplicate tokens are refused."""
        with pytest.raises(VocabMismatchError):
            Vocab(2, ("0", "1", "=", "="))


class TestBinary:
    """Tests for binary-operation datasets."""

    def test_partition(self, add_split: Split) -> None:
        """Test train and test together cover every pair exactly once."""
        pairs = [e.operands for e in [*add_split.train, *add_split.test]]
        assert len(add_split.train) == 30
        assert len(pairs) == len(set(pairs)) == P * P
        assert not add_split.val

    def test_labels_and_layout(self, add_split: Split, add_vocab: Vocab) -> None:
        """Test prompts are [a, +, b, =] labelled with a + b mod p."""
        for e in add_split.train:
            a, b = e.operands
            assert e.tokens == (a, add_vocab.op_id(Op.ADD), b, add_vocab.id("="))
            assert e.target == (a + b) % P

    def test_division_excludes_zero_divisor(self) -> None:
        """Test division pairs never divide by zero."""
        split = gen_binary(Op.DIV, P, 10, seed=0)
        pairs = [e.operands for e in [*split.train, *split.test]]
        assert len(pairs) == P * (P - 1)
        assert all(b != 0 for _, b in pairs)

    def test_deterministic(self) -> None:
        """Test the same seed gives the same split and a new seed a new one."""
        a = gen_binary(Op.MUL, P, 20, seed=4)
        b = gen_binary(Op.MUL, P, 20, seed=4)
        c = gen_binary(Op.MUL, P, 20, seed=5)
        assert a.train == b.train
        assert a.train != c.train

    @pytest.mark.parametrize("n_train", [0, P * P + 1])
    def test_bad_size(self, n_train: int) -> None:
        """Test n_train must lie in [1, number of pairs]."""
        with pytest.raises(TooFewPairsError):
            gen_binary(Op.ADD, P, n_train, seed=0)

    def test_swap_closed_train_rejected(self) -> None:
        """Test a commutative training set holding every twin is refused."""
        with pytest.raises(SwapClosedError) as exc:
            gen_binary(Op.ADD, P, P * P, seed=0)
        assert exc.value.details["n_train"] == P * P

    def test_full_train_allowed_for_non_commutative(self) -> None:
        """Test the swap check only applies to commutative ops."""
        split = gen_binary(Op.SUB, P, P * P, seed=0)
        assert is_swap_closed(split.train)
        assert not split.test


class TestComposition:
    """Tests for n-ary composition datasets."""

    def test_sizes_and_disjointness(self) -> None:
        """Test train, val and test are disjoint samples of the requested sizes."""
        split = gen_composition(Op.ADD, 3, P, n_train=50, n_val=20, n_test=30, seed=1)
        assert split.sizes() == {"train": 50, "val": 20, "test": 30}
        keys = [e.operands for e in [*split.train, *split.val, *split.test]]
        assert len(set(keys)) == 100
        assert split.eval_set is split.val

    def test_layout(self) -> None:
        """Test prompts alternate operands and op symbols, ending with =."""
        vocab = build_vocab(P, [Op.MUL])
        split = gen_composition(Op.MUL, 4, P, 10, 0, 5, seed=0, vocab=vocab)
        e = split.train[0]
        assert len(e.tokens) == 8
        assert e.tokens[1::2] == (7, 7, 7, 8)
        assert e.target == eval_composition(Op.MUL, list(e.operands), P)

    def test_mul_excludes_zero(self) -> None:
        """Test multiplicative tuples never contain 0."""
        split = gen_composition(Op.MUL, 3, P, 100, 0, 50, seed=2)
        assert all(0 not in e.operands for e in [*split.train, *split.test])

    def test_too_many(self) -> None:
        """Test more tuples than exist is refused."""
        with pytest.raises(TooFewPairsError):
            gen_composition(Op.ADD, 3, 3, 20, 5, 5, seed=0)

    def test_non_associative(self) -> None:
        """Test non-associative ops are refused."""
        with pytest.raises(NonAssociativeOpError):
            gen_composition(Op.SUB, 3, P, 10, 0, 10)

    @pytest.mark.parametrize("n", [2, 9])
    def test_arity_range(self, n: int) -> None:
        """Test arity must lie in [3, 8]."""
        with pytest.raises(ConfigError):
            gen_composition(Op.ADD, n, P, 10, 0, 10)


class TestSystem:
    """Tests for two-equation system datasets."""

    def test_templates_split_evenly(self) -> None:
        """Test each set is split between the two templates."""
        split = gen_system(Op.ADD, P, n_train=40, n_val=10, n_test=21, seed=0)
        assert split.sizes() == {"train": 40, "val": 10, "test": 21}
        ask_b = [e for e in split.train if e.task == system_task(Op.ADD, TemplateId.ASK_B)]
        assert len(ask_b) == 20

    def test_prompt_and_label(self) -> None:
        """Test the 13-token prompt and its answer."""
        vocab = build_vocab(P, [Op.MUL], system=True)
        split = gen_system(Op.MUL, P, 20, 0, 20, seed=3, vocab=vocab)
        for e in split.train:
            assert len(e.tokens) == 13
            assert vocab.decode(e.tokens[-2:])[1] == "?"
            a, b, c = e.operands
            if e.task.endswith(TemplateId.ASK_B):
                assert e.target == eval_op(Op.MUL, eval_op(Op.MUL, a, b, P), c, P)
                assert vocab.token(e.tokens[-2]) == "B"
            else:
                assert eval_op(Op.MUL, a, e.target, P) == b
                assert vocab.token(e.tokens[-2]) == "A"


class TestLimitedTokens:
    """Tests for operand-limited training sets."""

    def test_train_limited_test_full(self) -> None:
        """Test training operands stay below the limit while test covers Z_p."""
        split = gen_limited(Op.ADD, 3, 13, n_train=60, n_val=20, n_test=200, max_operand=8, seed=0)
        assert len(split.train) == 60
        assert all(max(e.operands) < 8 for e in split.train)
        assert any(max(e.operands) >= 8 for e in split.test)
        held = {e.operands for e in [*split.val, *split.test]}
        assert not held & {e.operands for e in split.train}

    def test_limit_above_p(self) -> None:
        """Test the limit may not exceed p."""
        with pytest.raises(ConfigError):
            gen_limited(Op.ADD, 3, P, 10, 0, 10, max_operand=P + 1)

    def test_limit_tokens_filters_train_only(self, add_split: Split) -> None:
        """Test filtering keeps only small-operand training examples."""
        limited = limit_tokens(add_split, max_operand=4)
        assert all(max(e.operands) < 4 for e in limited.train)
        assert limited.test == add_split.test

    def test_limit_tokens_empty(self, add_split: Split) -> None:
        """Test a filter that removes everything raises."""
        nonzero = [e for e in add_split.train if e.operands != (0, 0)]
        split = Split(train=nonzero, test=add_split.test, seed=0, p=P)
        with pytest.raises(EmptyAfterFilterError):
            limit_tokens(split, max_operand=1)

    def test_limit_tokens_above_p(self, add_split: Split) -> None:
        """Test the filter limit may not exceed p."""
        with pytest.raises(ConfigError) as exc:
            limit_tokens(add_split, max_operand=P + 1)
        assert exc.value.details == {"max_operand": P + 1, "p": P}
        assert limit_tokens(add_split, max_operand=P).train == add_split.train


class TestAugment:
    """Tests for commutative augmentation."""

    def test_adds_twins(self, add_vocab: Vocab) -> None:
        """Test every a != b example gains its swapped twin with the same label."""
        batch = [binary_example(Op.ADD, a, b, P, add_vocab) for a, b in [(1, 2), (3, 3), (4, 5)]]
        out = augment_commutative(batch, Op.ADD)
        assert out[:3] == batch
        assert {e.operands for e in out[3:]} == {(2, 1), (5, 4)}
        assert all(e.target == (sum(e.operands)) % P for e in out)
        assert is_swap_closed(out)

    def test_existing_twin_not_duplicated(self, add_vocab: Vocab) -> None:
        """Test a twin already in the batch is not added again."""
        batch = [binary_example(Op.ADD, a, b, P, add_vocab) for a, b in [(1, 2), (2, 1)]]
        assert len(augment_commutative(batch, Op.ADD)) == 2

    def test_exclude(self, add_vocab: Vocab) -> None:
        """Test excluded twins are skipped."""
        batch = [binary_example(Op.ADD, 1, 2, P, add_vocab)]
        assert len(augment_commutative(batch, Op.ADD, exclude={(2, 1)})) == 1

    def test_non_commutative(self, add_vocab: Vocab) -> None:
        """Test augmentation refuses non-commutative ops."""
        with pytest.raises(NotCommutativeError):
            augment_commutative([], Op.SUB)

    def test_arrays_match_examples(self, add_split: Split) -> None:
        """Test the array form adds the same twins as the example form."""
        batch = add_split.train[:12]
        tokens, targets = stack(batch)
        aug_tokens, aug_targets = augment_arrays(tokens, targets, Op.ADD)
        expected = augment_commutative(batch, Op.ADD)
        assert {tuple(row) for row in aug_tokens} == {e.tokens for e in expected}
        assert len(aug_tokens) == len(expected)
        assert ((aug_tokens[:, 0] + aug_tokens[:, 2]) % P == aug_targets).all()

    def test_arrays_exclude_mask(self, add_vocab: Vocab) -> None:
        """Test the [p, p] mask drops held-out twins."""
        tokens, targets = stack([binary_example(Op.ADD, 1, 2, P, add_vocab)])
        exclude = np.zeros((P, P), dtype=bool)
        exclude[2, 1] = True
        out, _ = augment_arrays(tokens, targets, Op.ADD, exclude)
        assert len(out) == 1

    def test_arrays_never_add_held_out_pairs(self, add_split: Split) -> None:
        """Test twins coinciding with test pairs are dropped under the holdout mask."""
        tokens, targets = stack(add_split.train)
        held_out = {e.operands for e in add_split.test}
        exclude = np.zeros((P, P), dtype=bool)
        for a, b in held_out:
            exclude[a, b] = True

        unmasked, _ = augment_arrays(tokens, targets, Op.ADD)
        masked, _ = augment_arrays(tokens, targets, Op.ADD, exclude)

        assert {(int(r[0]), int(r[2])) for r in unmasked} & held_out
        assert not {(int(r[0]), int(r[2])) for r in masked} & held_out

    def test_arrays_need_binary_prompts(self) -> None:
        """Test longer prompts are refused."""
        with pytest.raises(DatasetError):
            augment_arrays(np.zeros((2, 6), dtype=np.int64), np.zeros(2, dtype=np.int64), Op.ADD)


class TestDatasetFiles:
    """Tests for JSON-lines export and validated import."""

    def test_split_round_trip(self, tmp_path: Path) -> None:
        """Test a written split reads back identically."""
        vocab = build_vocab(P, [Op.ADD])
        split = gen_composition(Op.ADD, 3, P, 20, 5, 10, seed=0, vocab=vocab)
        written = write_split(tmp_path, split, vocab)
        assert {p.name for p in written} == {"train.jsonl", "val.jsonl", "test.jsonl", "vocab.json"}
        loaded, loaded_vocab = read_split(tmp_path)
        assert loaded_vocab == vocab
        assert loaded.train == split.train
        assert loaded.val == split.val
        assert loaded.test == split.test

    def test_line_format(self, tmp_path: Path, add_split: Split) -> None:
        """Test each line is one {tokens, target, task} object."""
        path = write_jsonl(tmp_path / "train.jsonl", add_split.train[:2])
        first = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
        assert set(first) == {"tokens", "target", "task"}
        assert first["task"] == "binary:add"

    def test_wrong_label_rejected(self, tmp_path: Path) -> None:
        """Test a target disagreeing with exact arithmetic is reported with its line."""
        path = tmp_path / "bad.jsonl"
        path.write_text('{"tokens": [1, 7, 2, 8], "target": 4, "task": "binary:add"}\n', encoding="utf-8")
        with pytest.raises(DatasetError, match="bad.jsonl:1"):
            read_jsonl(path, P)

    def test_malformed_line(self, tmp_path: Path) -> None:
        """Test a malformed line is rejected."""
        path = tmp_path / "bad.jsonl"
        path.write_text('{"tokens": "oops"}\n', encoding="utf-8")
        with pytest.raises(DatasetError):
            read_jsonl(path, P)

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test a missing dataset raises FileError."""
        with pytest.raises(FileError):
            read_jsonl(tmp_path / "none.jsonl", P)


class TestTaskTags:
    """Tests for task tags and labels."""

    def test_parse(self) -> None:
        """Test tags split into kind, op and extra."""
        kind, op, extra = parse_task("composition:mul:4")
        assert (kind, op, extra) == ("composition", Op.MUL, "4")

    def test_unknown(self) -> None:
        """Test an unknown tag raises DatasetError."""
        with pytest.raises(DatasetError):
            parse_task("ternary:add")

    def test_label(self) -> None:
        """Test labels come from exact arithmetic."""
        assert label("binary:div", (6, 3), P) == 2
        assert label("composition:add:3", (3, 3, 3), P) == 2
