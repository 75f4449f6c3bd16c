"""Minimal dense-tensor engine with reverse-mode automatic differentiation."""

from app.autodiff.gradcheck import check_gradients, numerical_grad, relative_error
from app.autodiff.ops import (
    add,
    causal_mask,
    cross_entropy_from_logits,
    embedding_gather,
    gelu,
    layer_norm,
    matmul,
    mul,
    relu,
    reshape,
    scale,
    select_position,
    softmax_rows,
    sum_all,
    transpose,
)
from app.autodiff.tensor import Parameter, Tensor, is_grad_enabled, no_grad

__all__ = [
    "Parameter",
    "Tensor",
    "add",
    "causal_mask",
    "check_gradients",
    "cross_entropy_from_logits",
    "embedding_gather",
    "gelu",
    "is_grad_enabled",
    "layer_norm",
    "matmul",
    "mul",
    "no_grad",
    "numerical_grad",
    "relative_error",
    "relu",
    "reshape",
    "scale",
    "select_position",
    "softmax_rows",
    "sum_all",
    "transpose",
]
