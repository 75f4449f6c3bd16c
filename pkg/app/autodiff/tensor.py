"""Dense numpy tensors with reverse-mode automatic differentiation."""

from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, DTypeLike, NDArray

from app.core.exceptions import NotScalarError

DEFAULT_DTYPE = np.float32

# Graph recording is switched off inside ``no_grad`` blocks (per thread / task)
_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)

type Array = NDArray[np.floating[Any]]
type BackwardFn = Callable[[Array], None]


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording for the duration of the block."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


class Tensor:
    """A float array that records the operations producing it.

    Leaf tensors created with ``requires_grad=True`` accumulate gradients in
    ``grad`` when :meth:`backward` runs on a scalar computed from them.
    """

    __slots__ = ("_backward", "_parents", "data", "grad", "requires_grad")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: DTypeLike | None = None,
    ) -> None:
        arr = np.asarray(data, dtype=dtype)
        if dtype is None and not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data: Array = arr
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None

    @classmethod
    def from_op(
        cls,
        data: Array,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
    ) -> "Tensor":
        """Wrap an op result, recording ``backward`` if any parent needs a gradient."""
        out = cls(data)
        if is_grad_enabled() and any(t.requires_grad for t in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> Array:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, g: Array) -> None:
        """Add ``g`` into ``grad`` (no-op for tensors that need no gradient)."""
        if not self.requires_grad:
            return
        g = np.asarray(g, dtype=self.data.dtype)
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def _topological_order(self) -> list["Tensor"]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            stack.extend((p, False) for p in node._parents if id(p) not in visited)
        return order

    def backward(self) -> None:
        """Backpropagate from this scalar into every reachable leaf.

        Gradients accumulate across calls until ``zero_grad``. The graph is freed
        afterwards; rebuild it with a new forward pass before calling again.
        """
        if self.data.size != 1:
            raise NotScalarError(
                f"backward needs a scalar, got shape {self.shape}",
                details={"shape": list(self.shape)},
            )
        if not self.requires_grad:
            return
        order = self._topological_order()
        self.accumulate(np.ones_like(self.data))
        for node in reversed(order):
            fn = node._backward
            if fn is None:
                continue
            if node.grad is not None:
                fn(node.grad)
            node._backward = None
            node._parents = ()
            node.grad = None

    # operator sugar, defined in app.autodiff.ops
    def __add__(self, other: "Tensor") -> "Tensor":
        from app.autodiff.ops import add

        return add(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        from app.autodiff.ops import mul

        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from app.autodiff.ops import matmul

        return matmul(self, other)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"


class Parameter(Tensor):
    """A named trainable leaf.

    ``frozen`` parameters receive no gradient and no optimizer update.
    ``row_mask`` (for 2-D tables) marks which rows the optimizer may update;
    ``None`` means all rows.
    """

    __slots__ = ("_frozen", "name", "row_mask")

    def __init__(
        self, data: ArrayLike, name: str, dtype: DTypeLike | None = None
    ) -> None:
        super().__init__(data, requires_grad=True, dtype=dtype)
        self.name = name
        self._frozen = False
        self.row_mask: NDArray[np.bool_] | None = None

    @property
    def frozen(self) -> bool:
        return self._frozen

    @frozen.setter
    def frozen(self, value: bool) -> None:
        self._frozen = value
        self.requires_grad = not value
        if value:
            self.grad = None

    @property
    def trainable_rows(self) -> NDArray[np.bool_]:
        """Boolean mask over the leading axis of rows the optimizer updates."""
        if self._frozen:
            return np.zeros(self.shape[0], dtype=bool)
        if self.row_mask is None:
            return np.ones(self.shape[0], dtype=bool)
        return self.row_mask

    def __repr__(self) -> str:
        state = "frozen" if self._frozen else "trainable"
        return f"Parameter({self.name!r}, shape={self.shape}, {state})"
