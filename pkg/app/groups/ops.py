"""The binary operations over Z_p and their algebraic tags."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from functools import reduce

from app.core.exceptions import (
    DivisionByZeroError,
    NoInverseError,
    NonAssociativeOpError,
    NotAGroupError,
    NotInGroupError,
    OperandOutOfRangeError,
)
from app.groups.number_theory import check_residue, ensure_prime

MIN_COMPOSITION_ARITY = 2


class Op(StrEnum):
    """Binary operations studied over Z_p."""

    ADD = "add"
    MUL = "mul"
    SQ_SUM = "sq_sum"
    SQ_SUM_LIN = "sq_sum_lin"
    CUBE_SUM_LIN = "cube_sum_lin"
    SQ_SUM_CROSS = "sq_sum_cross"
    SUB = "sub"
    DIV = "div"
    SUM_SQ = "sum_sq"
    SUM_CUBE = "sum_cube"

    @property
    def info(self) -> "OpInfo":
        return OP_INFO[self]

    @property
    def commutative(self) -> bool:
        return OP_INFO[self].commutative

    @property
    def is_abelian_group(self) -> bool:
        return OP_INFO[self].is_abelian_group

    @property
    def anti_abelian_of(self) -> "Op | None":
        return OP_INFO[self].anti_abelian_of

    @property
    def associative(self) -> bool:
        return self.is_abelian_group

    @property
    def symbol(self) -> str:
        return OP_INFO[self].symbol

    @property
    def formula(self) -> str:
        return OP_INFO[self].formula


@dataclass(frozen=True, slots=True)
class OpInfo:
    """Evaluation rule and tags of one operation."""

    rule: Callable[[int, int], int] | None
    commutative: bool
    symbol: str
    formula: str
    is_abelian_group: bool = False
    anti_abelian_of: Op | None = None


OP_INFO: dict[Op, OpInfo] = {
    Op.ADD: OpInfo(lambda a, b: a + b, True, "+", "x1+x2", is_abelian_group=True),
    Op.MUL: OpInfo(lambda a, b: a * b, True, "*", "x1*x2", is_abelian_group=True),
    Op.SQ_SUM: OpInfo(lambda a, b: a * a + b * b, True, "<sq_sum>", "x1^2+x2^2"),
    Op.SQ_SUM_LIN: OpInfo(
        lambda a, b: a * a + b * b + a + b, True, "<sq_sum_lin>", "x1^2+x2^2+x1+x2"
    ),
    Op.CUBE_SUM_LIN: OpInfo(
        lambda a, b: a**3 + b**3 + a + b, True, "<cube_sum_lin>", "x1^3+x2^3+x1+x2"
    ),
    Op.SQ_SUM_CROSS: OpInfo(
        lambda a, b: a * a + b * b + a * b, True, "<sq_sum_cross>", "x1^2+x2^2+x1*x2"
    ),
    Op.SUB: OpInfo(lambda a, b: a - b, False, "-", "x1-x2", anti_abelian_of=Op.ADD),
    # division goes through the modular inverse in eval_op
    Op.DIV: OpInfo(None, False, "/", "x1/x2", anti_abelian_of=Op.MUL),
    Op.SUM_SQ: OpInfo(lambda a, b: (a + b) ** 2, True, "<sum_sq>", "(x1+x2)^2"),
    Op.SUM_CUBE: OpInfo(lambda a, b: (a + b) ** 3, True, "<sum_cube>", "(x1+x2)^3"),
}


def identity(op: Op) -> int:
    """Identity element of a group operation (0 for add, 1 for mul)."""
    if op is Op.ADD:
        return 0
    if op is Op.MUL:
        return 1
    raise NotAGroupError(f"{op} has no identity element", details={"op": str(op)})


def modular_inverse(x: int, p: int) -> int:
    """Multiplicative inverse of ``x`` mod ``p``."""
    if x % p == 0:
        raise NoInverseError(
            "0 has no multiplicative inverse", details={"x": x, "p": p}
        )
    return pow(x, -1, p)


def eval_op(op: Op, a: int, b: int, p: int) -> int:
    """Evaluate ``a op b`` reduced mod ``p``.

    Args:
        op: The operation.
        a: Left operand, a residue mod ``p``.
        b: Right operand, a residue mod ``p`` (nonzero for division).
        p: The prime modulus.

    Returns:
        The value of the operation as a residue mod ``p``.
    """
    ensure_prime(p)
    check_residue(a, p, "a")
    check_residue(b, p, "b")
    if op is Op.DIV:
        if b == 0:
            raise DivisionByZeroError(
                f"{a}/{b} is undefined mod {p}", details={"a": a, "b": b, "p": p}
            )
        return a * modular_inverse(b, p) % p
    rule = op.info.rule
    if rule is None:  # pragma: no cover
        raise NotAGroupError(f"{op} has no direct rule", details={"op": str(op)})
    return rule(a, b) % p


def inverse(x: int, op: Op, p: int) -> int:
    """Group inverse of ``x`` under ``op`` (add or mul)."""
    ensure_prime(p)
    check_residue(x, p, "x")
    if op is Op.ADD:
        return -x % p
    if op is Op.MUL:
        return modular_inverse(x, p)
    raise NotAGroupError(f"{op} has no inverse elements", details={"op": str(op)})


def eval_composition(op: Op, xs: Sequence[int], p: int) -> int:
    """Left fold ``x1 op x2 op ... op xn`` for an associative op."""
    if not op.associative:
        raise NonAssociativeOpError(
            f"{op} compositions are ill-defined", details={"op": str(op)}
        )
    if len(xs) < MIN_COMPOSITION_ARITY:
        raise OperandOutOfRangeError(
            "a composition needs at least two operands", details={"n": len(xs)}
        )
    if op is Op.MUL and any(x == 0 for x in xs):
        raise NotInGroupError(
            "0 is outside the multiplicative group", details={"operands": list(xs)}
        )
    return reduce(lambda acc, x: eval_op(op, acc, x, p), xs[1:], xs[0])


def square_plus_product(a: int, b: int) -> int:
    """The integer operation a∘b = a² + ab, a standard non-associative example."""
    return a * a + a * b
