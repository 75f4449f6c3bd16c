"""Pytest configuration and fixtures."""

import logging
from collections.abc import Generator

import pytest

from app.config import get_settings
from app.data.generators import gen_binary
from app.data.schemas import Split
from app.data.vocab import Vocab, build_vocab
from app.groups.ops import Op
from app.model.schemas import ModelConfig
from app.model.transformer import Model, init_model

SMALL_P = 7


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch: pytest.MonkeyPatch) -> Generator[None]:
    """Isolate every test from ambient GROK_* variables and cached settings."""
    for name in ("GROK_THREADS", "GROK_OUTPUT_DIR", "GROK_EVAL_CHUNK_SIZE", "GROK_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def reset_logging() -> Generator[None]:
    """Drop handlers installed by CLI invocations once a test finishes."""
    yield
    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)
    root.setLevel(logging.WARNING)


@pytest.fixture
def add_vocab() -> Vocab:
    """Vocabulary for addition over Z_7."""
    return build_vocab(SMALL_P, [Op.ADD])


@pytest.fixture
def add_split(add_vocab: Vocab) -> Split:
    """Addition over Z_7 with 30 training pairs."""
    return gen_binary(Op.ADD, SMALL_P, 30, seed=0, vocab=add_vocab)


@pytest.fixture
def tiny_config(add_vocab: Vocab) -> ModelConfig:
    """A model small enough for exhaustive gradient checks."""
    return ModelConfig(
        vocab_size=add_vocab.size,
        d_model=8,
        n_heads=2,
        n_layers=1,
        embed_mlp_depth=1,
        max_seq_len=4,
        classifier_hidden=8,
    )


@pytest.fixture
def tiny_model(tiny_config: ModelConfig) -> Model:
    """A freshly initialised tiny model."""
    return init_model(tiny_config, seed=0)
