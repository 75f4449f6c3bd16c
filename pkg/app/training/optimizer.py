"""AdamW with decoupled weight decay and per-row update masks."""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from app.autodiff.tensor import Parameter
from app.core.exceptions import ShapeMismatchError
from app.training.schemas import TrainConfig


@dataclass(slots=True)
class AdamWState:
    """First/second moments keyed by parameter name, plus the step counter."""

    step: int = 0
    m: dict[str, NDArray[np.floating]] = field(default_factory=dict)
    v: dict[str, NDArray[np.floating]] = field(default_factory=dict)


def _row_mask(param: Parameter, grad: NDArray[np.floating]) -> NDArray[np.bool_] | None:
    if param.row_mask is None:
        return None
    return param.row_mask.reshape((-1,) + (1,) * (grad.ndim - 1))


def adamw_step(
    params: Sequence[Parameter],
    grads: Sequence[NDArray[np.floating] | None],
    state: AdamWState,
    cfg: TrainConfig,
) -> None:
    """One AdamW update in place.

    Weight decay ``w <- w - lr * wd * w`` is applied separately from the
    bias-corrected Adam step. Frozen parameters, parameters without a gradient
    and rows outside a parameter's ``row_mask`` are left untouched.
    """
    if len(params) != len(grads):
        raise ShapeMismatchError(
            f"{len(params)} parameters but {len(grads)} gradients",
            details={"params": len(params), "grads": len(grads)},
        )
    state.step += 1
    b1, b2 = cfg.betas
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for p, g in zip(params, grads, strict=True):
        if p.frozen or g is None:
            continue
        if g.shape != p.shape:
            raise ShapeMismatchError(
                f"gradient shape {g.shape} does not match {p.name} {p.shape}",
                details={
                    "param": p.name,
                    "param_shape": list(p.shape),
                    "grad_shape": list(g.shape),
                },
            )
        mask = _row_mask(p, g)
        if mask is not None:
            g = np.where(mask, g, 0)
        m = state.m.get(p.name)
        v = state.v.get(p.name)
        if m is None or v is None or m.shape != p.shape:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[p.name], state.v[p.name] = m, v
        decay = cfg.lr * cfg.weight_decay * p.data
        update = decay + cfg.lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
        if mask is not None:
            update = np.where(mask, update, 0)
        p.data -= update.astype(p.dtype)


class AdamW:
    """Stateful wrapper feeding each parameter's ``grad`` to :func:`adamw_step`."""

    def __init__(self, params: Sequence[Parameter], cfg: TrainConfig) -> None:
        self.params = list(params)
        self.cfg = cfg
        self.state = AdamWState()

    def step(self) -> None:
        adamw_step(self.params, [p.grad for p in self.params], self.state, self.cfg)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
