"""Commutative augmentation: add the operand-swapped twin of every binary example."""

from collections.abc import Collection, Sequence

import numpy as np
from numpy.typing import NDArray

from app.core.exceptions import DatasetError, NotCommutativeError
from app.data.schemas import Example
from app.groups.ops import Op

# [a, OP, b, =] -> [b, OP, a, =]
SWAP_ORDER = (2, 1, 0, 3)
BINARY_SEQ_LEN = 4


def _require_commutative(op: Op) -> None:
    if not op.commutative:
        raise NotCommutativeError(
            f"{op} is not commutative; swapped twins would be mislabelled",
            details={"op": str(op)},
        )


def augment_commutative(
    batch: Sequence[Example],
    op: Op,
    exclude: Collection[tuple[int, ...]] | None = None,
) -> list[Example]:
    """The batch followed by the swapped twin of each example with ``a != b``.

    Args:
        batch: Binary-operation examples.
        op: Their operation; must be commutative.
        exclude: Operand pairs whose twins must not be added (held-out pairs).

    Returns:
        A swap-closed batch (up to excluded twins) with the original examples first.
    """
    _require_commutative(op)
    present = {e.operands for e in batch}
    twins: list[Example] = []
    for e in batch:
        if len(e.operands) != 2:  # noqa: PLR2004
            raise DatasetError(
                "commutative augmentation applies to binary prompts only",
                details={"task": e.task},
            )
        a, b = e.operands
        swapped = (b, a)
        if a == b or swapped in present or (exclude is not None and swapped in exclude):
            continue
        present.add(swapped)
        twins.append(
            Example(
                tokens=tuple(e.tokens[i] for i in SWAP_ORDER),
                target=e.target,
                task=e.task,
                operands=swapped,
            )
        )
    return [*batch, *twins]


def augment_arrays(
    tokens: NDArray[np.int64],
    targets: NDArray[np.int64],
    op: Op,
    exclude: NDArray[np.bool_] | None = None,
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Array form of :func:`augment_commutative` used inside the training loop.

    ``exclude`` is a ``[p, p]`` mask; a twin ``(b, a)`` is dropped when
    ``exclude[b, a]`` is set.
    """
    _require_commutative(op)
    if tokens.ndim != 2 or tokens.shape[1] != BINARY_SEQ_LEN:  # noqa: PLR2004
        raise DatasetError(
            "commutative augmentation applies to binary prompts only",
            details={"shape": list(tokens.shape)},
        )
    a, b = tokens[:, 0], tokens[:, 2]
    keep = a != b
    if exclude is not None:
        keep &= ~exclude[b, a]
    # a twin already in the batch is not added twice
    size = int(max(a.max(initial=0), b.max(initial=0))) + 1
    present = np.zeros((size, size), dtype=bool)
    present[a, b] = True
    keep &= ~present[b, a]
    twin_tokens = tokens[keep][:, SWAP_ORDER]
    # duplicates among the twins themselves
    _, first = np.unique(twin_tokens[:, [0, 2]], axis=0, return_index=True)
    first.sort()
    return (
        np.concatenate([tokens, twin_tokens[first]]),
        np.concatenate([targets, targets[keep][first]]),
    )
