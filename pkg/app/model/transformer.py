"""Decoder-only transformer with an MLP embedding stack and an MLP classifier."""

import logging
import math
from collections.abc import Iterator
from enum import StrEnum
from typing import Self

import numpy as np
from numpy.typing import ArrayLike, DTypeLike, NDArray

from app.autodiff import ops
from app.autodiff.tensor import DEFAULT_DTYPE, Parameter, Tensor
from app.core.exceptions import (
    IndexOutOfRangeError,
    ShapeMismatchError,
    UnknownPrefixError,
)
from app.model.schemas import ModelConfig

logger = logging.getLogger(__name__)

INIT_STD = 0.02


class ParamKind(StrEnum):
    WEIGHT = "weight"
    BIAS = "bias"
    GAIN = "gain"


def parameter_layout(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...], ParamKind]]:
    """Every parameter as ``(name, shape, kind)`` in initialisation order."""
    d, v, ff, h = cfg.d_model, cfg.vocab_size, cfg.ffn_hidden, cfg.classifier_hidden
    w, b, g = ParamKind.WEIGHT, ParamKind.BIAS, ParamKind.GAIN
    layout: list[tuple[str, tuple[int, ...], ParamKind]] = [
        ("embedding.token_table", (v, d), w),
        ("embedding.pos_table", (cfg.max_seq_len, d), w),
    ]
    for i in range(cfg.embed_mlp_depth):
        layout += [
            (f"embedding.mlp.{i}.weight", (d, d), w),
            (f"embedding.mlp.{i}.bias", (d,), b),
        ]
    for layer in range(cfg.n_layers):
        pre = f"decoder.{layer}"
        layout += [(f"{pre}.ln1.gain", (d,), g), (f"{pre}.ln1.bias", (d,), b)]
        for proj in ("q", "k", "v", "o"):
            layout += [
                (f"{pre}.attn.w{proj}", (d, d), w),
                (f"{pre}.attn.b{proj}", (d,), b),
            ]
        layout += [
            (f"{pre}.ln2.gain", (d,), g),
            (f"{pre}.ln2.bias", (d,), b),
            (f"{pre}.ffn.w1", (d, ff), w),
            (f"{pre}.ffn.b1", (ff,), b),
            (f"{pre}.ffn.w2", (ff, d), w),
            (f"{pre}.ffn.b2", (d,), b),
        ]
    layout += [
        ("classifier.ln.gain", (d,), g),
        ("classifier.ln.bias", (d,), b),
        ("classifier.w1", (d, h), w),
        ("classifier.b1", (h,), b),
        ("classifier.w2", (h, v), w),
        ("classifier.b2", (v,), b),
    ]
    return layout


def init_parameter(
    shape: tuple[int, ...],
    kind: ParamKind,
    rng: np.random.Generator,
    dtype: DTypeLike = DEFAULT_DTYPE,
) -> NDArray[np.floating]:
    """normal(0, 0.02) weights, zero biases, unit gains."""
    if kind is ParamKind.WEIGHT:
        return rng.normal(0.0, INIT_STD, size=shape).astype(dtype)
    if kind is ParamKind.GAIN:
        return np.ones(shape, dtype=dtype)
    return np.zeros(shape, dtype=dtype)


class EmbeddingStage(StrEnum):
    """Where :meth:`Model.embed` stops: raw lookup or after the MLP stack."""

    TABLE = "table"
    MLP = "mlp"


class Model:
    """Named parameters plus the forward pass over them.

    Parameters live in one ordered mapping keyed by dotted path
    (``decoder.0.attn.wq``); layers are addressed by prefix for freezing and
    transfer.
    """

    def __init__(self, config: ModelConfig, params: dict[str, Parameter]) -> None:
        expected = [name for name, _, _ in parameter_layout(config)]
        if list(params) != expected:
            raise ShapeMismatchError(
                "parameter set does not match the model layout",
                details={"missing": sorted(set(expected) - set(params))},
            )
        self.config = config
        self.params = params

    # parameters

    def named_parameters(self) -> list[tuple[str, Parameter]]:
        return list(self.params.items())

    def parameters(self) -> list[Parameter]:
        return list(self.params.values())

    def __getitem__(self, name: str) -> Parameter:
        return self.params[name]

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self.params.values())

    def matching(self, prefix: str) -> list[Parameter]:
        return [p for name, p in self.params.items() if name.startswith(prefix)]

    def set_frozen(self, prefix: str, frozen: bool) -> int:
        """Freeze or unfreeze every parameter whose name starts with ``prefix``.

        Returns:
            The number of parameters updated.
        """
        matched = self.matching(prefix)
        if not matched:
            raise UnknownPrefixError(
                f"no parameter name starts with {prefix!r}", details={"prefix": prefix}
            )
        for p in matched:
            p.frozen = frozen
        logger.debug(
            "Set frozen=%s on %d parameters under %r", frozen, len(matched), prefix
        )
        return len(matched)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    @property
    def dtype(self) -> np.dtype:
        return self.params["embedding.token_table"].dtype

    def _copy(self, dtype: DTypeLike | None) -> Self:
        params: dict[str, Parameter] = {}
        for name, p in self.params.items():
            q = Parameter(p.data.astype(dtype or p.dtype, copy=True), name)
            q.frozen = p.frozen
            q.row_mask = None if p.row_mask is None else p.row_mask.copy()
            params[name] = q
        return type(self)(self.config, params)

    def clone(self) -> Self:
        """Deep copy with the same freeze flags and row masks."""
        return self._copy(None)

    def astype(self, dtype: DTypeLike) -> Self:
        """Copy with every parameter cast to ``dtype`` (float64 for gradient checks)."""
        return self._copy(dtype)

    def state_dict(self) -> dict[str, NDArray[np.floating]]:
        return {name: p.data for name, p in self.params.items()}

    # forward pass

    def _check_tokens(self, tokens: ArrayLike) -> NDArray[np.int64]:
        ids = np.asarray(tokens, dtype=np.int64)
        if ids.ndim != 2:  # noqa: PLR2004
            raise ShapeMismatchError(
                "tokens must be a [batch, seq] matrix",
                details={"shape": list(ids.shape)},
            )
        limit = self.config.max_seq_len
        if ids.shape[1] > limit:
            raise IndexOutOfRangeError(
                f"sequence length {ids.shape[1]} exceeds max_seq_len {limit}",
                details={"seq_len": ids.shape[1], "max_seq_len": limit},
            )
        return ids

    def _linear(self, x: Tensor, w: str, b: str) -> Tensor:
        return ops.add(ops.matmul(x, self.params[w]), self.params[b])

    def embed(
        self, tokens: ArrayLike, stage: EmbeddingStage = EmbeddingStage.MLP
    ) -> Tensor:
        """Per-token embedding ``[B, T, d]``: lookup plus position, then the MLPs."""
        ids = self._check_tokens(tokens)
        seq_len = ids.shape[1]
        x = ops.embedding_gather(self.params["embedding.token_table"], ids)
        pos_table = self.params["embedding.pos_table"]
        x = ops.add(x, ops.embedding_gather(pos_table, np.arange(seq_len)))
        if stage is EmbeddingStage.TABLE:
            return x
        for i in range(self.config.embed_mlp_depth):
            pre = f"embedding.mlp.{i}"
            x = ops.add(x, ops.gelu(self._linear(x, f"{pre}.weight", f"{pre}.bias")))
        return x

    def _split_heads(self, x: Tensor, batch: int, seq_len: int) -> Tensor:
        cfg = self.config
        x = ops.reshape(x, (batch, seq_len, cfg.n_heads, cfg.head_dim))
        return ops.transpose(x, (0, 2, 1, 3))

    def _attention(self, x: Tensor, layer: int) -> Tensor:
        pre = f"decoder.{layer}.attn"
        batch, seq_len, d = x.shape
        q = self._split_heads(self._linear(x, f"{pre}.wq", f"{pre}.bq"), batch, seq_len)
        k = self._split_heads(self._linear(x, f"{pre}.wk", f"{pre}.bk"), batch, seq_len)
        v = self._split_heads(self._linear(x, f"{pre}.wv", f"{pre}.bv"), batch, seq_len)
        scores = ops.matmul(q, ops.transpose(k, (0, 1, 3, 2)))
        scores = ops.scale(scores, 1.0 / math.sqrt(self.config.head_dim))
        scores = ops.add(scores, ops.causal_mask(seq_len, x.dtype))
        ctx = ops.matmul(ops.softmax_rows(scores), v)
        ctx = ops.reshape(ops.transpose(ctx, (0, 2, 1, 3)), (batch, seq_len, d))
        return self._linear(ctx, f"{pre}.wo", f"{pre}.bo")

    def _block(self, x: Tensor, layer: int) -> Tensor:
        pre = f"decoder.{layer}"
        p = self.params
        h = ops.layer_norm(x, p[f"{pre}.ln1.gain"], p[f"{pre}.ln1.bias"])
        x = ops.add(x, self._attention(h, layer))
        h = ops.layer_norm(x, p[f"{pre}.ln2.gain"], p[f"{pre}.ln2.bias"])
        h = ops.gelu(self._linear(h, f"{pre}.ffn.w1", f"{pre}.ffn.b1"))
        return ops.add(x, self._linear(h, f"{pre}.ffn.w2", f"{pre}.ffn.b2"))

    def decode(self, tokens: ArrayLike) -> Tensor:
        """Activations ``[B, T, d]`` after every decoder block (causal)."""
        x = self.embed(tokens)
        for layer in range(self.config.n_layers):
            x = self._block(x, layer)
        return x

    def classify(self, h: Tensor) -> Tensor:
        """Classifier head on ``[B, d]`` features."""
        p = self.params
        h = ops.layer_norm(h, p["classifier.ln.gain"], p["classifier.ln.bias"])
        h = ops.gelu(self._linear(h, "classifier.w1", "classifier.b1"))
        return self._linear(h, "classifier.w2", "classifier.b2")

    def forward(self, tokens: ArrayLike) -> Tensor:
        """Logits ``[B, vocab]`` read from the last sequence position."""
        return self.classify(ops.select_position(self.decode(tokens), -1))

    __call__ = forward


def init_model(cfg: ModelConfig, seed: int, dtype: DTypeLike = DEFAULT_DTYPE) -> Model:
    """Build a model with freshly initialised weights, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    params = {
        name: Parameter(init_parameter(shape, kind, rng, dtype), name)
        for name, shape, kind in parameter_layout(cfg)
    }
    model = Model(cfg, params)
    logger.debug(
        "Initialised model with %d parameters (seed=%d)", model.parameter_count(), seed
    )
    return model
