"""Differentiable operations on :class:`~app.autodiff.tensor.Tensor`.

Every op computes its result with numpy and registers a closure that routes the
upstream gradient to its inputs. Broadcasting is limited to suffix shapes: the
second operand of ``add``/``mul`` may drop leading axes of the first (a bias
``[d]`` against activations ``[B, T, d]``); anything else needs an explicit
``reshape``.
"""

import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.autodiff.tensor import Array, Tensor
from app.core.exceptions import IndexOutOfRangeError, ShapeMismatchError

LAYER_NORM_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


def _check_suffix(a: Tensor, b: Tensor, op: str) -> None:
    if b.ndim > a.ndim or a.shape[a.ndim - b.ndim :] != b.shape:
        raise ShapeMismatchError(
            f"{op}: shape {b.shape} is not a suffix of {a.shape}",
            details={"op": op, "a": list(a.shape), "b": list(b.shape)},
        )


def _reduce_to(g: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``g`` over the leading axes (and size-1 axes) it was broadcast along."""
    lead = g.ndim - len(shape)
    if lead > 0:
        g = g.sum(axis=tuple(range(lead)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise ``a + b`` where ``b.shape`` is a suffix of ``a.shape``."""
    _check_suffix(a, b, "add")

    def backward(g: Array) -> None:
        a.accumulate(g)
        b.accumulate(_reduce_to(g, b.shape))

    return Tensor.from_op(a.data + b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise ``a * b`` where ``b.shape`` is a suffix of ``a.shape``."""
    _check_suffix(a, b, "mul")

    def backward(g: Array) -> None:
        a.accumulate(g * b.data)
        b.accumulate(_reduce_to(g * a.data, b.shape))

    return Tensor.from_op(a.data * b.data, (a, b), backward)


def scale(x: Tensor, s: float) -> Tensor:
    """Multiply by a constant."""

    def backward(g: Array) -> None:
        x.accumulate(g * s)

    return Tensor.from_op(x.data * x.dtype.type(s), (x,), backward)


def sum_all(x: Tensor) -> Tensor:
    """Sum of every element, as a scalar tensor."""

    def backward(g: Array) -> None:
        x.accumulate(np.broadcast_to(g, x.shape))

    return Tensor.from_op(np.asarray(x.data.sum(), dtype=x.dtype), (x,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product ``[..., m, k] @ [..., k, n]``.

    Leading (batch) axes broadcast the numpy way; gradients are summed back
    over the axes each operand was broadcast along.
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:  # noqa: PLR2004
        raise ShapeMismatchError(
            f"matmul: cannot multiply {a.shape} by {b.shape}",
            details={"a": list(a.shape), "b": list(b.shape)},
        )
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError as e:
        raise ShapeMismatchError(
            f"matmul: batch axes of {a.shape} and {b.shape} do not broadcast",
            details={"a": list(a.shape), "b": list(b.shape)},
        ) from e

    def backward(g: Array) -> None:
        a.accumulate(_reduce_to(g @ np.swapaxes(b.data, -1, -2), a.shape))
        b.accumulate(_reduce_to(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return Tensor.from_op(a.data @ b.data, (a, b), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g: Array) -> None:
        x.accumulate(g * mask)

    return Tensor.from_op(np.where(mask, x.data, 0).astype(x.dtype), (x,), backward)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    v = x.data
    t = np.tanh(_GELU_C * (v + _GELU_K * v**3))

    def backward(g: Array) -> None:
        dt = (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_K * v * v)
        x.accumulate(g * (0.5 * (1.0 + t) + 0.5 * v * dt))

    return Tensor.from_op((0.5 * v * (1.0 + t)).astype(x.dtype), (x,), backward)


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis, stabilised by subtracting the row max."""
    if x.ndim == 0 or x.shape[-1] < 1:
        raise ShapeMismatchError(
            "softmax_rows needs a nonempty last axis", details={"shape": list(x.shape)}
        )
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g: Array) -> None:
        x.accumulate(y * (g - (g * y).sum(axis=-1, keepdims=True)))

    return Tensor.from_op(y, (x,), backward)


def layer_norm(
    x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS
) -> Tensor:
    """Normalise the last axis to zero mean and unit variance, then scale and shift."""
    d = x.shape[-1] if x.ndim else 0
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeMismatchError(
            f"layer_norm: gain {gain.shape} / bias {bias.shape} "
            f"do not match last axis {d}",
            details={
                "x": list(x.shape),
                "gain": list(gain.shape),
                "bias": list(bias.shape),
            },
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv

    def backward(g: Array) -> None:
        dxhat = g * gain.data
        dx = inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        x.accumulate(dx)
        gain.accumulate(_reduce_to(g * xhat, gain.shape))
        bias.accumulate(_reduce_to(g, bias.shape))

    out = (xhat * gain.data + bias.data).astype(x.dtype)
    return Tensor.from_op(out, (x, gain, bias), backward)


def _check_ids(ids: NDArray[np.integer], limit: int, what: str) -> None:
    if ids.size and (ids.min() < 0 or ids.max() >= limit):
        raise IndexOutOfRangeError(
            f"{what} must lie in [0, {limit}), got range [{ids.min()}, {ids.max()}]",
            details={"limit": limit, "min": int(ids.min()), "max": int(ids.max())},
        )


def embedding_gather(table: Tensor, ids: ArrayLike) -> Tensor:
    """Rows of ``table`` ([V, d]) selected by integer ``ids`` of any shape."""
    idx = np.asarray(ids, dtype=np.int64)
    _check_ids(idx, table.shape[0], "token ids")

    def backward(g: Array) -> None:
        if not table.requires_grad:
            return
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx, g)
        table.accumulate(gt)

    return Tensor.from_op(table.data[idx], (table,), backward)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    """Permute axes; ``axes`` as in :func:`numpy.transpose`."""
    perm = tuple(axes)
    inverse = tuple(np.argsort(perm))

    def backward(g: Array) -> None:
        x.accumulate(np.transpose(g, inverse))

    return Tensor.from_op(np.transpose(x.data, perm), (x,), backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeMismatchError(
            f"cannot reshape {x.shape} to {tuple(shape)}",
            details={"from": list(x.shape), "to": list(shape)},
        ) from e

    def backward(g: Array) -> None:
        x.accumulate(g.reshape(x.shape))

    return Tensor.from_op(out, (x,), backward)


def select_position(x: Tensor, position: int) -> Tensor:
    """Slice ``x[:, position, :]`` out of a ``[B, T, d]`` activation."""
    if x.ndim != 3:  # noqa: PLR2004
        raise ShapeMismatchError(
            "select_position needs a [batch, seq, dim] tensor",
            details={"shape": list(x.shape)},
        )

    def backward(g: Array) -> None:
        gx = np.zeros_like(x.data)
        gx[:, position, :] = g
        x.accumulate(gx)

    return Tensor.from_op(x.data[:, position, :], (x,), backward)


def cross_entropy_from_logits(logits: Tensor, targets: ArrayLike) -> Tensor:
    """Mean negative log-likelihood of ``targets`` under row-softmax of ``logits``."""
    if logits.ndim != 2:  # noqa: PLR2004
        raise ShapeMismatchError(
            "cross_entropy_from_logits needs [batch, classes] logits",
            details={"shape": list(logits.shape)},
        )
    y = np.asarray(targets, dtype=np.int64)
    if y.shape != (logits.shape[0],):
        raise ShapeMismatchError(
            f"{y.shape[0] if y.ndim else 0} targets for {logits.shape[0]} rows",
            details={"targets": list(y.shape), "logits": list(logits.shape)},
        )
    _check_ids(y, logits.shape[1], "target ids")
    n = y.shape[0]
    rows = np.arange(n)
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_probs = z - log_z
    loss = -log_probs[rows, y].mean()

    def backward(g: Array) -> None:
        d = np.exp(log_probs)
        d[rows, y] -= 1.0
        logits.accumulate(d * (g / n))

    return Tensor.from_op(np.asarray(loss, dtype=logits.dtype), (logits,), backward)


def causal_mask(seq_len: int, dtype: np.dtype) -> Tensor:
    """Additive ``[T, T]`` mask: 0 on and below the diagonal, a large negative above."""
    upper = np.triu(np.ones((seq_len, seq_len), dtype=bool), k=1)
    neg = np.finfo(dtype).min / 2
    return Tensor(np.where(upper, neg, 0.0).astype(dtype))
