"""Scale profiles that shrink an unscaled experiment to CI size."""

import logging
from typing import Any

from app.data.schemas import TaskKind
from app.experiments.schemas import ExperimentConfig, Scale
from app.groups.ops import Op

logger = logging.getLogger(__name__)

CI_P = 31
CI_MAX_STEPS = 20_000
CI_BATCH_CAP = 512
CI_WIDTH = 128


def _scaled_count(n: int, ratio: float, floor: int) -> int:
    return max(floor, round(n * ratio)) if n else 0


def apply_scale(cfg: ExperimentConfig, scale: Scale) -> ExperimentConfig:
    """Rewrite ``cfg`` for ``scale``, logging every substituted value.

    ``ci`` moves to ``p = 31`` and scales example counts by the ratio of the
    example spaces (``(31 / p) ** arity``) and ``max_operand`` by ``31 / p``.
    """
    if scale is Scale.PAPER or cfg.p == CI_P:
        return cfg
    ratio = CI_P / cfg.p
    space = ratio**cfg.arity
    changes: dict[str, Any] = {
        "p": CI_P,
        "n_train": _scaled_count(cfg.n_train, space, 1),
        "n_val": _scaled_count(cfg.n_val, space, 1),
        "n_test": _scaled_count(cfg.n_test, space, 1),
    }
    if cfg.task is TaskKind.BINARY:
        pairs = CI_P * (CI_P - 1) if cfg.op is Op.DIV else CI_P * CI_P
        changes["n_train"] = min(changes["n_train"], pairs)
    if cfg.task is TaskKind.LIMITED_TOKENS:
        changes["max_operand"] = max(1, min(CI_P, round(cfg.max_operand * ratio)))
    train = {
        "max_steps": min(cfg.train.max_steps, CI_MAX_STEPS),
        "batch_size": min(cfg.train.batch_size, CI_BATCH_CAP),
    }
    model = {
        "d_model": min(cfg.model.d_model, CI_WIDTH),
        "classifier_hidden": min(cfg.model.classifier_hidden, CI_WIDTH),
    }
    for key, value in changes.items():
        logger.info("Scale %s: %s %s -> %s", scale, key, getattr(cfg, key), value)
    for key, value in train.items():
        before = getattr(cfg.train, key)
        logger.info("Scale %s: train.%s %s -> %s", scale, key, before, value)
    for key, value in model.items():
        before = getattr(cfg.model, key)
        logger.info("Scale %s: model.%s %s -> %s", scale, key, before, value)
    data = cfg.model_dump()
    data.update(changes)
    data["train"].update(train)
    data["model"].update(model)
    return ExperimentConfig.model_validate(data)
