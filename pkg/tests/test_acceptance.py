"""End-to-end checks at p = 97, a smoke-sized training run and scaled directional runs."""

from pathlib import Path
from typing import Any

import numpy as np
import pytest

from app.data.vocab import Special
from app.experiments import Scale, apply_scale, run_experiment
from app.experiments.schemas import ExperimentConfig
from app.experiments.service import (
    experiment_vocab,
    load_experiment,
    model_config,
    run_seed,
)
from app.groups import Op, eval_op
from app.ka import (
    TWO_PI,
    anti_abelian_rep,
    cyclic_add_rep,
    cyclic_mul_rep,
    eval_anti_abelian,
    eval_rep,
    eval_two_factor_mul,
    phi,
    psi,
    run_suite,
    two_factor_rep,
    verify_rep,
    verify_universality,
)
from app.model import init_model, load_checkpoint
from app.training import RunRecord
from app.transfer.service import TOKEN_TABLE

P = 97
CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SMOKE = CONFIGS / "smoke" / "add_p13.json"
PAPER_CONFIGS = CONFIGS / "paper"
SEEDS = [0, 1, 2, 3, 4]
GROK_THRESHOLD = 0.99


class TestRepresentationsAtP97:
    """Known values of the exact representations over Z_97."""

    def test_phi_values(self) -> None:
        """Test embeddings of the identity, one, and 25 = 5^2."""
        add = cyclic_add_rep(P)
        mul = cyclic_mul_rep(P, 1, 5)

        assert phi(add, 0).components[0] == 0j
        assert phi(add, 1).components[0] == pytest.approx(complex(0.0, TWO_PI / P))
        assert phi(mul, 25).components[0] == pytest.approx(complex(0.0, 2 * TWO_PI / (P - 1)))

    def test_psi_values(self) -> None:
        """Test decoding sums of embeddings."""
        add = cyclic_add_rep(P)
        mul = cyclic_mul_rep(P, 1, 5)

        assert psi(add, phi(add, 0)) == 0
        assert psi(add, phi(add, 96) + phi(add, 5)) == 4
        assert psi(mul, phi(mul, 2) + phi(mul, 49)) == 1

    def test_compositions(self) -> None:
        """Test n-ary evaluation, twisted and untwisted."""
        assert eval_rep(cyclic_add_rep(P), [1, 2, 3]) == 6
        assert eval_rep(cyclic_add_rep(P, 5), [50, 60, 70]) == 83
        assert eval_rep(cyclic_mul_rep(P, 1, 5), [96, 96, 96]) == 96

    def test_anti_abelian(self) -> None:
        """Test subtraction and division through embedding differences."""
        sub = anti_abelian_rep(cyclic_add_rep(P))
        div = anti_abelian_rep(cyclic_mul_rep(P, 1, 5))

        assert eval_anti_abelian(sub, 5, 5) == 0
        assert eval_anti_abelian(sub, 3, 10) == 90
        assert eval_anti_abelian(div, 1, 2) == eval_op(Op.DIV, 1, 2, P) == 49

    def test_two_factor(self) -> None:
        """Test multiplication through the two-component representation."""
        assert eval_two_factor_mul(two_factor_rep(P, 32, 3), 1, 1) == 1
        assert eval_two_factor_mul(two_factor_rep(P, 32, 3), 2, 3) == 6
        assert eval_two_factor_mul(two_factor_rep(P, 48, 2), 96, 96) == 1

    def test_exhaustive_pairs(self) -> None:
        """Test every pair of the carrier decodes exactly."""
        add = verify_rep(cyclic_add_rep(P))
        sub = verify_rep(anti_abelian_rep(cyclic_add_rep(P)))
        mul = verify_rep(cyclic_mul_rep(P))

        assert (add.checked, add.failures) == (P * P, [])
        assert (sub.checked, sub.failures) == (P * P, [])
        assert (mul.checked, mul.failures) == ((P - 1) ** 2, [])

    @pytest.mark.parametrize("n", [3, 4])
    def test_universality(self, n: int) -> None:
        """Test the same rep decodes longer compositions."""
        report = verify_universality(cyclic_mul_rep(P), n, samples=2_000, seed=1)

        assert report.checked == 2_000
        assert report.ok


@pytest.mark.slow
class TestFullSuite:
    """The complete verification sweep."""

    def test_run_suite_p97(self) -> None:
        """Test every standard representation over Z_97 with 10^4 tuples per arity."""
        reports = run_suite(P, samples=10_000)

        assert reports
        assert [r.rep for r in reports if not r.ok] == []


@pytest.mark.slow
class TestSmokeTraining:
    """A small addition run memorises its training set."""

    def test_train_accuracy_reaches_one(self, tmp_path: Path) -> None:
        """Test p=13 addition with an 80% split fits the training set within 2000 steps."""
        base = load_experiment(SMOKE)
        cfg = ExperimentConfig.model_validate(
            {
                **base.model_dump(),
                "seeds": [0],
                "train": {
                    **base.train.model_dump(),
                    "batch_size": 1024,
                    "max_steps": 2000,
                    "early_stop": False,
                },
            }
        )

        record = run_seed(cfg, 0, tmp_path)

        assert record.final_train_acc == 1.0
        assert len(record.history) == 20

    def test_test_accuracy_in_two_of_three_seeds(self, tmp_path: Path) -> None:
        """Test at least two of three seeds reach 0.99 test accuracy within 20000 steps."""
        cfg = load_experiment(SMOKE)

        records = run_experiment(cfg, tmp_path)

        assert [r.seed for r in records] == [0, 1, 2]
        assert sum(r.final_test_acc >= GROK_THRESHOLD for r in records) >= 2


def scaled(name: str, seeds: list[int], **train: Any) -> ExperimentConfig:
    """A shipped experiment shrunk to Z_31 with the given seeds and train overrides."""
    cfg = apply_scale(load_experiment(PAPER_CONFIGS / f"{name}.json"), Scale.CI)
    data = cfg.model_dump()
    data["seeds"] = seeds
    data["train"].update(train)
    return ExperimentConfig.model_validate(data)


def median_grok_step(records: list[RunRecord]) -> float:
    """Median grokking step with non-grokked runs counted past the budget."""
    steps = [
        r.grok_step if r.grok_step is not None else r.config["train"]["max_steps"] + 1
        for r in records
    ]
    return float(np.median(steps))


@pytest.mark.slow
class TestAugmentationDirection:
    """Commutative augmentation at p = 31."""

    def test_augmented_groks_no_later(self, tmp_path: Path) -> None:
        """Test the median grokking step with augmentation does not exceed the baseline."""
        train = {"batch_size": 128, "early_stop": True}
        baseline = run_experiment(scaled("ca_add_n5000_baseline", SEEDS, **train), tmp_path)
        augmented = run_experiment(scaled("ca_add_n5000_ca", SEEDS, **train), tmp_path)

        assert all(r.p == 31 for r in [*baseline, *augmented])
        assert median_grok_step(augmented) <= median_grok_step(baseline)


@pytest.mark.slow
class TestTransferContracts:
    """Frozen rows and trainable unknowns after a hybrid transfer run."""

    def test_hybrid_moves_only_unknown_rows(self, tmp_path: Path) -> None:
        """Test numeral rows keep the source values while A and B rows leave their init."""
        run_experiment(scaled("source_add", [0], max_steps=1000), tmp_path)
        cfg = scaled("system_add_n50000_et", [0], max_steps=1000, early_stop=False)

        (record,) = run_experiment(cfg, tmp_path)

        vocab = experiment_vocab(cfg)
        source = load_checkpoint(tmp_path / "source_add" / "seed_0" / "model.ckpt")
        target = load_checkpoint(tmp_path / cfg.name / "seed_0" / "model.ckpt")
        init = init_model(model_config(cfg, vocab), 0)
        rows = target.tensors[TOKEN_TABLE]
        assert record.history[-1].step == 1000
        np.testing.assert_array_equal(rows[: cfg.p], source.tensors[TOKEN_TABLE][: cfg.p])
        for token in (Special.UNK_A, Special.UNK_B):
            row = vocab.id(token)
            assert not np.array_equal(rows[row], init[TOKEN_TABLE].data[row])


@pytest.mark.slow
class TestTransferDirection:
    """Decoder and embedding transfer at p = 31."""

    def test_decoder_transfer_groks_no_later(self, tmp_path: Path) -> None:
        """Test multiplication with an addition decoder groks no later than from scratch."""
        run_experiment(scaled("source_add", SEEDS, early_stop=True), tmp_path)
        baseline = run_experiment(scaled("dt_mul_baseline", SEEDS, early_stop=True), tmp_path)
        transfer = run_experiment(scaled("dt_mul_from_add", SEEDS, early_stop=True), tmp_path)

        assert median_grok_step(transfer) <= median_grok_step(baseline)

    def test_embedding_transfer_groks_no_later(self, tmp_path: Path) -> None:
        """Test 3-operand sums with an addition embedding grok no later than from scratch."""
        run_experiment(scaled("source_add", SEEDS, early_stop=True), tmp_path)
        baseline = run_experiment(scaled("et_add3_n10000_baseline", SEEDS, early_stop=True), tmp_path)
        transfer = run_experiment(scaled("et_add3_n10000_et", SEEDS, early_stop=True), tmp_path)

        assert median_grok_step(transfer) <= median_grok_step(baseline)
