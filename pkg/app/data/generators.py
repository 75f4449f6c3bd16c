"""Generators for the four task families.

Every label comes from ``app.groups``; prompts use the token layout of
``app.data.vocab`` with numeral ``x`` encoded as id ``x``.
"""

import logging
from collections.abc import Sequence
from dataclasses import replace

import numpy as np
from numpy.typing import NDArray

from app.core.exceptions import (
    ConfigError,
    DatasetError,
    EmptyAfterFilterError,
    NonAssociativeOpError,
    SwapClosedError,
    TooFewPairsError,
)
from app.data.schemas import Example, Split, TaskKind
from app.data.vocab import Special, Vocab, build_vocab
from app.groups.number_theory import ensure_prime
from app.groups.ops import Op, eval_composition, eval_op
from app.groups.systems import SystemTemplate, TemplateId, solve_system

logger = logging.getLogger(__name__)

DEFAULT_N_VAL = 30_000
DEFAULT_N_TEST = 100_000
DEFAULT_MAX_OPERAND = 80
MIN_COMPOSITION_OPERANDS = 3
MAX_COMPOSITION_OPERANDS = 8


# task tags


def binary_task(op: Op) -> str:
    return f"{TaskKind.BINARY}:{op}"


def composition_task(op: Op, n_operands: int) -> str:
    return f"{TaskKind.COMPOSITION}:{op}:{n_operands}"


def system_task(op: Op, template: TemplateId) -> str:
    return f"{TaskKind.SYSTEM}:{op}:{template}"


def parse_task(task: str) -> tuple[TaskKind, Op, str | None]:
    """Split a task tag into ``(kind, op, extra)``."""
    parts = task.split(":")
    try:
        kind = TaskKind(parts[0])
        op = Op(parts[1])
    except (IndexError, ValueError) as e:
        raise DatasetError(f"unknown task tag {task!r}", details={"task": task}) from e
    return kind, op, parts[2] if len(parts) > 2 else None  # noqa: PLR2004


def label(task: str, operands: Sequence[int], p: int) -> int:
    """Exact answer of a task instance, from group_core."""
    kind, op, extra = parse_task(task)
    if kind is TaskKind.BINARY:
        a, b = operands
        return eval_op(op, a, b, p)
    if kind is TaskKind.COMPOSITION:
        return eval_composition(op, list(operands), p)
    if kind is TaskKind.SYSTEM:
        template = SystemTemplate(TemplateId(extra), op)
        a, b, c = operands
        unknown_a, unknown_b = solve_system(template, a, b, c, p)
        return unknown_b if template.asks == "B" else unknown_a
    raise DatasetError(f"no labels for task {task!r}", details={"task": task})


def operands_from_tokens(task: str, tokens: Sequence[int]) -> tuple[int, ...]:
    """Recover the residues a prompt was built from."""
    kind, _, extra = parse_task(task)
    if kind is TaskKind.BINARY:
        return tokens[0], tokens[2]
    if kind is TaskKind.COMPOSITION:
        return tuple(tokens[0:-1:2])
    if kind is TaskKind.SYSTEM:
        b = tokens[2] if extra == TemplateId.ASK_B else tokens[4]
        return tokens[0], b, tokens[8]
    raise DatasetError(f"no prompt layout for task {task!r}", details={"task": task})


# prompt builders


def binary_example(op: Op, a: int, b: int, p: int, vocab: Vocab) -> Example:
    """``[a, OP, b, =] -> a op b``."""
    task = binary_task(op)
    return Example(
        tokens=(a, vocab.op_id(op), b, vocab.id(Special.EQ)),
        target=label(task, (a, b), p),
        task=task,
        operands=(a, b),
    )


def composition_example(op: Op, xs: Sequence[int], p: int, vocab: Vocab) -> Example:
    """``[x1, OP, x2, OP, ..., xn, =] -> x1 op ... op xn``."""
    op_id = vocab.op_id(op)
    tokens: list[int] = []
    for x in xs:
        tokens += [x, op_id]
    tokens[-1] = vocab.id(Special.EQ)
    task = composition_task(op, len(xs))
    return Example(
        tokens=tuple(tokens), target=label(task, xs, p), task=task, operands=tuple(xs)
    )


def system_example(
    op: Op, template: TemplateId, a: int, b: int, c: int, p: int, vocab: Vocab
) -> Example:
    """Two equations over unknowns A and B followed by the query token and ``?``.

    ``askB``: ``a OP b = A & A OP c = B  B ?``
    ``askA``: ``a OP A = b & A OP c = B  A ?``
    """
    o, eq = vocab.op_id(op), vocab.id(Special.EQ)
    amp, ask = vocab.id(Special.AND), vocab.id(Special.ASK)
    ua, ub = vocab.id(Special.UNK_A), vocab.id(Special.UNK_B)
    if template is TemplateId.ASK_B:
        first = [a, o, b, eq, ua]
        query = ub
    else:
        first = [a, o, ua, eq, b]
        query = ua
    tokens = (*first, amp, ua, o, c, eq, ub, query, ask)
    task = system_task(op, template)
    operands = (a, b, c)
    return Example(
        tokens=tokens, target=label(task, operands, p), task=task, operands=operands
    )


# sampling


def _carrier(op: Op, p: int) -> NDArray[np.int64]:
    """Residues a sampled operand may take: 0 is excluded for multiplicative groups."""
    start = 1 if op in {Op.MUL, Op.DIV} else 0
    return np.arange(start, p, dtype=np.int64)


def _sample_codes(
    rng: np.random.Generator, population: int, count: int, what: str
) -> NDArray[np.int64]:
    if count > population:
        raise TooFewPairsError(
            f"requested {count} distinct {what} but only {population} exist",
            details={"requested": count, "available": population},
        )
    return rng.choice(population, size=count, replace=False).astype(np.int64)


def _tuples(
    codes: NDArray[np.int64], carrier: NDArray[np.int64], n: int
) -> list[tuple[int, ...]]:
    digits = np.unravel_index(codes, (carrier.size,) * n)
    cols = np.stack([carrier[d] for d in digits], axis=1)
    return [tuple(int(v) for v in row) for row in cols]


def is_swap_closed(examples: Sequence[Example]) -> bool:
    """Whether every binary example's operand-swapped twin is also present."""
    keys = {e.operands for e in examples}
    return all((e.operands[1], e.operands[0]) in keys for e in examples)


def gen_binary(
    op: Op, p: int, n_train: int, seed: int, vocab: Vocab | None = None
) -> Split:
    """All pairs of Z_p (``b != 0`` for division), shuffled, split at ``n_train``.

    Args:
        op: The binary operation.
        p: The prime modulus.
        n_train: Number of training pairs; the rest form the test set.
        seed: Shuffle seed.
        vocab: Vocabulary to encode with (defaults to ``build_vocab(p, [op])``).

    Returns:
        The split, deterministic in ``seed``.

    Raises:
        SwapClosedError: A commutative op drew a train set holding every swapped twin.
    """
    ensure_prime(p)
    vocab = vocab or build_vocab(p, [op])
    b_values = range(1, p) if op is Op.DIV else range(p)
    pairs = [(a, b) for a in range(p) for b in b_values]
    if not 0 < n_train <= len(pairs):
        raise TooFewPairsError(
            f"n_train={n_train} but {op} over Z_{p} has {len(pairs)} pairs",
            details={"requested": n_train, "available": len(pairs)},
        )
    order = np.random.default_rng(seed).permutation(len(pairs))
    examples = [binary_example(op, *pairs[i], p, vocab) for i in order]
    split = Split(train=examples[:n_train], test=examples[n_train:], seed=seed, p=p)
    if op.commutative and is_swap_closed(split.train):
        raise SwapClosedError(
            f"every swapped twin of the {op} training set is already in it",
            details={"op": str(op), "p": p, "n_train": n_train, "seed": seed},
        )
    logger.info("Generated %s over Z_%d: %s", binary_task(op), p, split.sizes())
    return split


def gen_composition(
    op: Op,
    n_operands: int,
    p: int,
    n_train: int,
    n_val: int = DEFAULT_N_VAL,
    n_test: int = DEFAULT_N_TEST,
    seed: int = 0,
    vocab: Vocab | None = None,
) -> Split:
    """Random n-ary compositions, sampled without replacement across train/val/test."""
    ensure_prime(p)
    if not op.associative:
        raise NonAssociativeOpError(
            f"{op} compositions are ill-defined", details={"op": str(op)}
        )
    if not MIN_COMPOSITION_OPERANDS <= n_operands <= MAX_COMPOSITION_OPERANDS:
        raise ConfigError(
            f"n_operands must be in "
            f"[{MIN_COMPOSITION_OPERANDS}, {MAX_COMPOSITION_OPERANDS}]",
            details={"n_operands": n_operands},
        )
    vocab = vocab or build_vocab(p, [op])
    carrier = _carrier(op, p)
    rng = np.random.default_rng(seed)
    total = n_train + n_val + n_test
    codes = _sample_codes(rng, carrier.size**n_operands, total, "tuples")
    tuples = _tuples(codes, carrier, n_operands)
    examples = [composition_example(op, xs, p, vocab) for xs in tuples]
    split = Split(
        train=examples[:n_train],
        val=examples[n_train : n_train + n_val],
        test=examples[n_train + n_val :],
        seed=seed,
        p=p,
    )
    task = composition_task(op, n_operands)
    logger.info("Generated %s over Z_%d: %s", task, p, split.sizes())
    return split


def _halves(n: int) -> tuple[int, int]:
    return n - n // 2, n // 2


def gen_system(
    op: Op,
    p: int,
    n_train: int,
    n_val: int = DEFAULT_N_VAL,
    n_test: int = DEFAULT_N_TEST,
    seed: int = 0,
    vocab: Vocab | None = None,
) -> Split:
    """Systems of two equations, half of each set per template."""
    ensure_prime(p)
    vocab = vocab or build_vocab(p, [op], system=True)
    templates = [SystemTemplate(t, op) for t in TemplateId]
    carrier = _carrier(op, p)
    rng = np.random.default_rng(seed)
    parts: dict[str, list[Example]] = {"train": [], "val": [], "test": []}
    sizes = {"train": _halves(n_train), "val": _halves(n_val), "test": _halves(n_test)}
    for i, template in enumerate(templates):
        counts = {name: pair[i] for name, pair in sizes.items()}
        codes = _sample_codes(rng, carrier.size**3, sum(counts.values()), "systems")
        tuples = _tuples(codes, carrier, 3)
        start = 0
        for name, count in counts.items():
            parts[name] += [
                system_example(op, template.template_id, *xs, p, vocab)
                for xs in tuples[start : start + count]
            ]
            start += count
    for name in parts:
        order = rng.permutation(len(parts[name]))
        parts[name] = [parts[name][j] for j in order]
    split = Split(
        train=parts["train"], val=parts["val"], test=parts["test"], seed=seed, p=p
    )
    logger.info("Generated systems over %s mod %d: %s", op, p, split.sizes())
    return split


def limit_tokens(split: Split, max_operand: int = DEFAULT_MAX_OPERAND) -> Split:
    """Keep only training examples whose operands are all below ``max_operand``.

    Validation and test sets are left untouched and keep covering all of Z_p.
    """
    if not 1 <= max_operand <= split.p:
        raise ConfigError(
            f"max_operand must lie in [1, {split.p}], got {max_operand}",
            details={"max_operand": max_operand, "p": split.p},
        )
    train = [e for e in split.train if max(e.operands) < max_operand]
    if not train:
        raise EmptyAfterFilterError(
            f"no training example has all operands below {max_operand}",
            details={"max_operand": max_operand, "before": len(split.train)},
        )
    logger.info(
        "Limited training operands to [0, %d): kept %d of %d examples",
        max_operand,
        len(train),
        len(split.train),
    )
    return replace(split, train=train)


def gen_limited(
    op: Op,
    n_operands: int,
    p: int,
    n_train: int,
    n_val: int = DEFAULT_N_VAL,
    n_test: int = DEFAULT_N_TEST,
    max_operand: int = DEFAULT_MAX_OPERAND,
    seed: int = 0,
    vocab: Vocab | None = None,
) -> Split:
    """Compositions trained on operands below ``max_operand`` and tested on all of Z_p.

    Val and test tuples are drawn first from the full carrier. Training tuples
    are then drawn from the operand-limited region, skipping anything already
    held out, passed through :func:`limit_tokens` and truncated to ``n_train``.
    """
    if max_operand > p:
        raise ConfigError(
            f"max_operand={max_operand} exceeds p={p}",
            details={"max_operand": max_operand, "p": p},
        )
    held_out = gen_composition(op, n_operands, p, 0, n_val, n_test, seed, vocab)
    vocab = vocab or build_vocab(p, [op])
    carrier = _carrier(op, p)
    limited = carrier[carrier < max_operand]
    seen = {e.operands for e in held_out.val} | {e.operands for e in held_out.test}
    rng = np.random.default_rng([seed, max_operand])
    population = limited.size**n_operands
    draw = min(population, n_train + len(seen))
    codes = _sample_codes(rng, population, draw, "tuples")
    candidates = _tuples(codes, limited, n_operands)
    fresh = [xs for xs in candidates if xs not in seen]
    if len(fresh) < n_train:
        raise TooFewPairsError(
            f"only {len(fresh)} operand-limited tuples remain for n_train={n_train}",
            details={"requested": n_train, "available": len(fresh)},
        )
    train = [composition_example(op, xs, p, vocab) for xs in fresh[: n_train]]
    split = limit_tokens(replace(held_out, train=train), max_operand)
    task = composition_task(op, n_operands)
    logger.info("Generated limited-token %s: %s", task, split.sizes())
    return split
