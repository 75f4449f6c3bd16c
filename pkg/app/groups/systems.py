"""Ground-truth solver for two-equation systems with unknowns A and B."""

from dataclasses import dataclass
from enum import StrEnum

from app.core.exceptions import NotAGroupError
from app.groups.ops import Op, eval_op, inverse


class TemplateId(StrEnum):
    """The two system layouts.

    ``ASK_B``: ``a ∘ b = A & A ∘ c = B``, asking for B.
    ``ASK_A``: ``a ∘ A = b & A ∘ c = B``, asking for A.
    """

    ASK_B = "askB_bothKnownFirst"
    ASK_A = "askA_unknownInFirst"


@dataclass(frozen=True, slots=True)
class SystemTemplate:
    """A system layout over one abelian group operation."""

    template_id: TemplateId
    op: Op

    def __post_init__(self) -> None:
        if not self.op.is_abelian_group:
            raise NotAGroupError(
                f"systems need a group operation, got {self.op}",
                details={"op": str(self.op)},
            )

    @property
    def asks(self) -> str:
        """Which unknown the query asks for."""
        return "B" if self.template_id is TemplateId.ASK_B else "A"


def solve_system(t: SystemTemplate, a: int, b: int, c: int, p: int) -> tuple[int, int]:
    """Solve for the unknowns (A, B) of a system.

    Args:
        t: The system template.
        a: First known operand.
        b: Second known operand.
        c: Operand of the second equation.
        p: The prime modulus.

    Returns:
        The pair (A, B).
    """
    if t.template_id is TemplateId.ASK_B:
        unknown_a = eval_op(t.op, a, b, p)
    else:
        unknown_a = eval_op(t.op, inverse(a, t.op, p), b, p)
    return unknown_a, eval_op(t.op, unknown_a, c, p)
