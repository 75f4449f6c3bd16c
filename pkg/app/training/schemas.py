"""Training configuration and run records."""

from typing import Any, Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Optimiser and schedule defaults
DEFAULT_BATCH_SIZE = 1024
COMPOSITION_BATCH_SIZE = 4096
DEFAULT_LR = 1e-3
DEFAULT_WEIGHT_DECAY = 0.1
DEFAULT_BETAS = (0.9, 0.98)
DEFAULT_EPS = 1e-8
DEFAULT_MAX_STEPS = 100_000
DEFAULT_EVAL_EVERY = 100
DEFAULT_GROK_THRESHOLD = 0.99


class TrainConfig(BaseModel):
    """Optimiser, schedule and augmentation settings for one run."""

    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=1)
    lr: float = Field(default=DEFAULT_LR, gt=0.0)
    weight_decay: float = Field(default=DEFAULT_WEIGHT_DECAY, ge=0.0)
    betas: tuple[float, float] = DEFAULT_BETAS
    eps: float = Field(default=DEFAULT_EPS, gt=0.0)
    max_steps: int = Field(default=DEFAULT_MAX_STEPS, ge=1)
    eval_every: int = Field(default=DEFAULT_EVAL_EVERY, ge=1)
    grok_threshold: float = Field(default=DEFAULT_GROK_THRESHOLD, gt=0.0, le=1.0)
    seed: int = 0
    augment_commutative: bool = False
    # stop at the first evaluation that reaches grok_threshold
    early_stop: bool = False
    checkpoint_every: int | None = Field(default=None, ge=1)

    @field_validator("betas")
    @classmethod
    def validate_betas(cls, v: tuple[float, float]) -> tuple[float, float]:
        """Both moment decay rates must lie in [0, 1)."""
        if not all(0.0 <= b < 1.0 for b in v):
            msg = f"betas must lie in [0, 1), got {v}"
            raise ValueError(msg)
        return v


class HistoryPoint(BaseModel):
    """Metrics at one evaluation step.

    ``train_loss`` and ``train_acc`` average the batches since the previous
    evaluation; ``test_acc`` is measured on the evaluation set.
    """

    step: int
    train_loss: float
    train_acc: float
    test_acc: float


class RunRecord(BaseModel):
    """Everything one training run reports."""

    operation: str
    task: str
    n_train: int
    method: str = "baseline"
    seed: int
    p: int
    history: list[HistoryPoint] = Field(default_factory=list)
    grok_step: int | None = None
    # for val/test protocols: the final test accuracy also reached the threshold
    grok_confirmed: bool | None = None
    final_train_acc: float = 0.0
    final_test_acc: float = 0.0
    transfer: dict[str, Any] | None = None
    config: dict[str, Any] = Field(default_factory=dict)
    wall_time: float = 0.0

    @model_validator(mode="after")
    def check_history(self) -> Self:
        """Steps strictly increase and grok_step, if set, is an evaluated step."""
        steps = [h.step for h in self.history]
        if any(b <= a for a, b in zip(steps, steps[1:], strict=False)):
            msg = "history steps must be strictly increasing"
            raise ValueError(msg)
        if self.grok_step is not None and self.history and self.grok_step not in steps:
            msg = f"grok_step {self.grok_step} is not an evaluated step"
            raise ValueError(msg)
        return self

    @property
    def grokked(self) -> bool:
        return self.grok_step is not None
