"""Types for exact finite-group representations."""

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Self

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.groups.number_theory import Prime, is_primitive_root


class GroupKind(StrEnum):
    """Which group (or derived operation) a representation encodes."""

    CYCLIC_ADD = "cyclic_add"
    CYCLIC_MUL = "cyclic_mul"
    PRODUCT_OF_CYCLICS = "product_of_cyclics"
    ANTI_ABELIAN = "anti_abelian"


class KaRep(BaseModel):
    """A constructive embedding/decoder pair for a finite group operation.

    Build instances through the constructors in ``app.ka.representation``,
    which raise lab errors; direct construction validates the same twist and
    generator conditions.
    """

    model_config = ConfigDict(frozen=True)

    group_kind: GroupKind
    p: Prime
    k: int = 1
    generator: int | None = None
    factors: tuple[int, int] | None = None
    k2: int = 1
    # anti-abelian reps reuse the embedding of this group kind
    base: GroupKind | None = None

    @model_validator(mode="after")
    def check_base(self) -> Self:
        """Anti-abelian reps name a cyclic base; other kinds have none."""
        anti = self.group_kind is GroupKind.ANTI_ABELIAN
        if anti and self.base not in {GroupKind.CYCLIC_ADD, GroupKind.CYCLIC_MUL}:
            msg = "anti_abelian representations need base cyclic_add or cyclic_mul"
            raise ValueError(msg)
        if not anti and self.base is not None:
            msg = f"{self.group_kind} representations take no base"
            raise ValueError(msg)
        return self

    @model_validator(mode="after")
    def check_twists(self) -> Self:
        """Twists are coprime with the period they act on; generators generate."""
        if self.multiplicative:
            if self.generator is None or not is_primitive_root(self.generator, self.p):
                msg = f"generator {self.generator} is not a primitive root mod {self.p}"
                raise ValueError(msg)
        if self.group_kind is GroupKind.PRODUCT_OF_CYCLICS:
            if self.factors is None:
                msg = "product_of_cyclics representations need factors (q1, q2)"
                raise ValueError(msg)
            q1, q2 = self.factors
            if q1 * q2 != self.p - 1 or 1 in (q1, q2):
                msg = f"({q1}, {q2}) is not a nontrivial split of {self.p - 1}"
                raise ValueError(msg)
            periods = [(self.k, q2), (self.k2, q1)]
        elif self.factors is not None:
            msg = f"{self.group_kind} representations take no factors"
            raise ValueError(msg)
        else:
            periods = [(self.k, self.p - 1 if self.multiplicative else self.p)]
        for k, order in periods:
            if math.gcd(k, order) != 1:
                msg = f"twist k={k} is not coprime with {order}"
                raise ValueError(msg)
        return self

    @property
    def m(self) -> int:
        """Number of cyclic factors (complex components of the embedding)."""
        return 2 if self.group_kind is GroupKind.PRODUCT_OF_CYCLICS else 1

    @property
    def underlying(self) -> GroupKind:
        """The group whose embedding is used."""
        return self.base if self.base is not None else self.group_kind

    @property
    def multiplicative(self) -> bool:
        return self.underlying is not GroupKind.CYCLIC_ADD

    @property
    def carrier(self) -> range:
        """Residues the representation accepts."""
        return range(1, self.p) if self.multiplicative else range(self.p)

    @property
    def label(self) -> str:
        """Short human-readable identifier used in reports."""
        parts = [f"p={self.p}"]
        if self.group_kind is GroupKind.ANTI_ABELIAN:
            parts.insert(0, f"over={self.base}")
        if self.factors is not None:
            parts.append(f"q1={self.factors[0]},q2={self.factors[1]}")
            parts.append(f"k1={self.k},k2={self.k2}")
        else:
            parts.append(f"k={self.k}")
        if self.generator is not None:
            parts.append(f"a={self.generator}")
        return f"{self.group_kind}({','.join(parts)})"


@dataclass(frozen=True, slots=True)
class Embedding2m:
    """``m`` complex components, i.e. a point of R^(2m)."""

    components: NDArray[np.complex128]

    @classmethod
    def zeros(cls, m: int) -> Self:
        return cls(np.zeros(m, dtype=np.complex128))

    @property
    def m(self) -> int:
        return int(self.components.shape[0])

    def as_real(self) -> NDArray[np.float64]:
        """The 2m real coordinates ``[re_1, im_1, ..., re_m, im_m]``."""
        return self.components.view(np.float64).copy()

    def __add__(self, other: "Embedding2m") -> "Embedding2m":
        return Embedding2m(self.components + other.components)

    def __sub__(self, other: "Embedding2m") -> "Embedding2m":
        return Embedding2m(self.components - other.components)


class VerificationFailure(BaseModel):
    """One tuple on which a representation disagrees with exact arithmetic."""

    operands: list[int]
    expected: int
    got: int | None = None
    error: str | None = None


class VerificationReport(BaseModel):
    """Outcome of an exhaustive or sampled verification sweep."""

    rep: str
    arity: int = 2
    checked: int
    failed: int = 0
    failures: list[VerificationFailure] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures
