"""The training loop, evaluation and grokking detection."""

import logging
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.typing import NDArray

from app.autodiff.ops import cross_entropy_from_logits
from app.autodiff.tensor import no_grad
from app.config import get_settings
from app.core.exceptions import ConfigMismatchError, DatasetError, VocabMismatchError
from app.core.logging import get_logger, log_with_context
from app.data.augment import augment_arrays
from app.data.generators import parse_task
from app.data.schemas import Example, Split, TaskKind, stack
from app.model.transformer import Model
from app.training.metrics import MetricsWriter
from app.training.optimizer import AdamW
from app.training.schemas import HistoryPoint, RunRecord, TrainConfig

logger = get_logger(__name__)

type CheckpointHook = Callable[[int, Model], None]


def detect_grokking(history: Sequence[HistoryPoint], threshold: float) -> int | None:
    """First evaluated step whose test accuracy reaches ``threshold`` (``>=``)."""
    for point in history:
        if point.test_acc >= threshold:
            return point.step
    return None


def _count_correct(
    model: Model, tokens: NDArray[np.int64], targets: NDArray[np.int64]
) -> int:
    with no_grad():
        logits = model.forward(tokens)
    return int((logits.data.argmax(axis=1) == targets).sum())


def evaluate(
    model: Model,
    examples: Sequence[Example],
    chunk_size: int | None = None,
    threads: int | None = None,
) -> float:
    """Exact-match accuracy of ``argmax(logits)`` over ``examples``.

    Chunks are scored on up to ``threads`` workers; correct counts are summed
    as integers, so the result does not depend on the thread count. An empty
    list scores 0.0.
    """
    if not examples:
        return 0.0
    settings = get_settings()
    chunk = chunk_size or settings.eval_chunk_size
    workers = threads or settings.threads
    tokens, targets = stack(examples)
    n = len(examples)
    bounds = [slice(i, min(i + chunk, n)) for i in range(0, n, chunk)]

    def score(s: slice) -> int:
        return _count_correct(model, tokens[s], targets[s])

    if workers <= 1 or len(bounds) == 1:
        correct = sum(map(score, bounds))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            correct = sum(pool.map(score, bounds))
    return correct / len(examples)


def _check_compatible(model: Model, split: Split) -> None:
    everything = [*split.train, *split.val, *split.test]
    max_id = max(max(*e.tokens, e.target) for e in everything)
    vocab_size = model.config.vocab_size
    if max_id >= vocab_size:
        raise VocabMismatchError(
            f"dataset uses token id {max_id} but the model vocabulary has {vocab_size}",
            details={"max_id": max_id, "vocab_size": vocab_size},
        )
    seq_len = max(len(e.tokens) for e in everything)
    max_seq_len = model.config.max_seq_len
    if seq_len > max_seq_len:
        raise ConfigMismatchError(
            f"prompts of length {seq_len} exceed max_seq_len {max_seq_len}",
            details={"seq_len": seq_len, "max_seq_len": max_seq_len},
        )


def _holdout_mask(split: Split, p: int) -> NDArray[np.bool_]:
    mask = np.zeros((p, p), dtype=bool)
    for e in [*split.val, *split.test]:
        mask[e.operands[0], e.operands[1]] = True
    return mask


def train(
    model: Model,
    split: Split,
    cfg: TrainConfig,
    record: RunRecord | None = None,
    metrics: MetricsWriter | None = None,
    on_checkpoint: CheckpointHook | None = None,
) -> RunRecord:
    """Train ``model`` in place with AdamW and return the filled-in run record.

    Args:
        model: The model to train; frozen parameters and masked rows stay fixed.
        split: Train examples plus the sets to evaluate on (val if present, else test).
        cfg: Optimiser, schedule and augmentation settings.
        record: Labels for the run (operation, method, ...); derived from the
            split when omitted.
        metrics: Optional CSV sink that receives every history point.
        on_checkpoint: Called with ``(step, model)`` every
            ``cfg.checkpoint_every`` steps.

    Returns:
        The run record with history, grokking step and final accuracies.
    """
    if not split.train:
        raise DatasetError("the training set is empty", details=split.sizes())
    _check_compatible(model, split)
    kind, op, _ = parse_task(split.train[0].task)
    p = split.p
    record = record or RunRecord(
        operation=op.formula,
        task=str(kind),
        n_train=len(split.train),
        seed=cfg.seed,
        p=p,
    )
    augment = cfg.augment_commutative and kind is TaskKind.BINARY
    if cfg.augment_commutative and not augment:
        logger.warning("Commutative augmentation only applies to binary tasks; ignored")
    exclude = _holdout_mask(split, p) if augment else None

    rng = np.random.default_rng(cfg.seed)
    train_x, train_y = stack(split.train)
    n = len(split.train)
    batch = min(cfg.batch_size, n)
    optimizer = AdamW(model.parameters(), cfg)
    history: list[HistoryPoint] = []
    order = rng.permutation(n)
    cursor = 0
    loss_sum = acc_sum = 0.0
    batches = 0
    start = time.perf_counter()
    log_with_context(
        logger, logging.INFO, "Training started",
        task=record.task, operation=record.operation, method=record.method,
        n_train=n, batch=batch, max_steps=cfg.max_steps, augment=augment,
    )

    for step in range(1, cfg.max_steps + 1):
        if cursor + batch > n:
            order = rng.permutation(n)
            cursor = 0
        idx = order[cursor : cursor + batch]
        cursor += batch
        bx, by = train_x[idx], train_y[idx]
        if augment:
            bx, by = augment_arrays(bx, by, op, exclude)

        optimizer.zero_grad()
        logits = model.forward(bx)
        loss = cross_entropy_from_logits(logits, by)
        acc_sum += float((logits.data.argmax(axis=1) == by).mean())
        loss_sum += loss.item()
        batches += 1
        loss.backward()
        optimizer.step()

        every = cfg.checkpoint_every
        if on_checkpoint is not None and every and step % every == 0:
            on_checkpoint(step, model)

        if step % cfg.eval_every and step != cfg.max_steps:
            continue
        point = HistoryPoint(
            step=step,
            train_loss=loss_sum / batches,
            train_acc=acc_sum / batches,
            test_acc=evaluate(model, split.eval_set),
        )
        history.append(point)
        loss_sum = acc_sum = 0.0
        batches = 0
        if metrics is not None:
            metrics.write(point)
        logger.debug(
            "step=%d loss=%.4f train_acc=%.4f test_acc=%.4f",
            point.step, point.train_loss, point.train_acc, point.test_acc,
        )
        if cfg.early_stop and point.test_acc >= cfg.grok_threshold:
            logger.info(
                "Reached %.2f accuracy at step %d; stopping early",
                cfg.grok_threshold,
                step,
            )
            break

    grok_step = detect_grokking(history, cfg.grok_threshold)
    if history and not split.val:
        final_test_acc = history[-1].test_acc
    else:
        final_test_acc = evaluate(model, split.test)
    confirmed = None if grok_step is None else final_test_acc >= cfg.grok_threshold
    result = record.model_copy(
        update={
            "history": history,
            "grok_step": grok_step,
            "grok_confirmed": confirmed,
            "final_train_acc": evaluate(model, split.train),
            "final_test_acc": final_test_acc,
            "config": {**record.config, "train": cfg.model_dump(mode="json")},
            "wall_time": time.perf_counter() - start,
        }
    )
    if grok_step is None:
        logger.info(
            "No grokking within %d steps (final test acc %.4f)",
            history[-1].step,
            final_test_acc,
        )
    else:
        logger.info(
            "Grokked at step %d (final test acc %.4f)", grok_step, final_test_acc
        )
    return RunRecord.model_validate(result.model_dump())
