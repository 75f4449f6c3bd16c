"""Token vocabularies shared by datasets, models and checkpoints."""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

from app.core.exceptions import VocabMismatchError
from app.groups.ops import Op


class Special(StrEnum):
    """Non-numeral tokens."""

    EQ = "="
    AND = "&"
    ASK = "?"
    UNK_A = "A"
    UNK_B = "B"
    PAD = "<pad>"


SYSTEM_TOKENS = (Special.AND, Special.ASK, Special.UNK_A, Special.UNK_B)


@dataclass(frozen=True, slots=True)
class Vocab:
    """Tokens in id order.

    Numerals ``"0" .. str(p - 1)`` always occupy ids ``0 .. p - 1``, so
    embedding rows of numerals line up between any two vocabularies over the
    same ``p``.
    """

    p: int
    tokens: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        numerals = tuple(str(i) for i in range(self.p))
        if self.tokens[: self.p] != numerals:
            raise VocabMismatchError(
                f"the first {self.p} tokens must be the numerals 0..{self.p - 1}",
                details={"p": self.p},
            )
        if len(set(self.tokens)) != len(self.tokens):
            raise VocabMismatchError("vocabulary tokens must be unique")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: object) -> bool:
        return token in self._index

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id(self, token: str | int) -> int:
        """Id of a token string, or of a numeral given as an int."""
        key = str(token)
        if key not in self._index:
            raise VocabMismatchError(
                f"token {key!r} is not in the vocabulary", details={"token": key}
            )
        return self._index[key]

    def op_id(self, op: Op) -> int:
        return self.id(op.symbol)

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]

    def is_numeral(self, token_id: int) -> bool:
        return 0 <= token_id < self.p

    def encode(self, tokens: Iterable[str | int]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


def build_vocab(p: int, ops: Sequence[Op], system: bool = False) -> Vocab:
    """Numerals, a symbol per op, ``=``, system tokens if asked, then ``<pad>``."""
    tokens = [str(i) for i in range(p)]
    tokens += [op.symbol for op in dict.fromkeys(ops)]
    tokens.append(Special.EQ)
    if system:
        tokens += list(SYSTEM_TOKENS)
    tokens.append(Special.PAD)
    return Vocab(p, tuple(str(t) for t in tokens))
