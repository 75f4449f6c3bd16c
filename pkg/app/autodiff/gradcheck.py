"""Central finite-difference checks of analytic gradients."""

from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from app.autodiff.tensor import Tensor

DEFAULT_EPS = 1e-3
# Relative errors are measured against at least this magnitude
RELATIVE_FLOOR = 1e-3


def numerical_grad(
    loss_fn: Callable[[], Tensor],
    t: Tensor,
    eps: float = DEFAULT_EPS,
    indices: NDArray[np.intp] | None = None,
) -> NDArray[np.float64]:
    """Central differences ``(f(x+eps) - f(x-eps)) / 2eps`` at flat ``indices``.

    ``loss_fn`` must rebuild the graph from ``t.data`` on every call.
    """
    if not t.data.flags.c_contiguous:
        t.data = np.ascontiguousarray(t.data)
    flat = t.data.reshape(-1)  # a view, so writes perturb t
    picked = np.arange(flat.size) if indices is None else indices
    out = np.zeros(picked.size, dtype=np.float64)
    for j, i in enumerate(picked):
        saved = flat[i]
        flat[i] = saved + eps
        up = loss_fn().item()
        flat[i] = saved - eps
        down = loss_fn().item()
        flat[i] = saved
        out[j] = (up - down) / (2.0 * eps)
    return out


def relative_error(
    analytic: NDArray[np.floating], numeric: NDArray[np.floating]
) -> NDArray[np.float64]:
    """Elementwise ``|a - n| / max(|a|, |n|, RELATIVE_FLOOR)``."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), RELATIVE_FLOOR)
    return np.abs(a - n) / denom


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    eps: float = DEFAULT_EPS,
    max_elements: int | None = None,
    seed: int = 0,
) -> float:
    """Largest relative error between backprop and finite differences.

    Args:
        loss_fn: Builds a scalar loss from the current data of ``tensors``.
        tensors: Leaves to check; use float64 data for meaningful results.
        eps: Finite-difference step.
        max_elements: If set, check a random subset of this many elements per tensor.
        seed: Seed for the subset choice.

    Returns:
        The maximum elementwise relative error over all checked elements.
    """
    for t in tensors:
        t.zero_grad()
    loss_fn().backward()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in tensors:
        if t.grad is None:
            analytic = np.zeros(t.data.size)
        else:
            analytic = t.grad.reshape(-1).astype(np.float64)
        indices = None
        if max_elements is not None and t.data.size > max_elements:
            indices = rng.choice(t.data.size, size=max_elements, replace=False)
        numeric = numerical_grad(loss_fn, t, eps, indices)
        picked = analytic if indices is None else analytic[indices]
        worst = max(worst, float(relative_error(picked, numeric).max(initial=0.0)))
    return worst
