"""Exact modular arithmetic over Z_p."""

from app.groups.number_theory import (
    DiscreteLogTable,
    Prime,
    discrete_log,
    ensure_prime,
    is_prime,
    log_table,
    primitive_root,
)
from app.groups.ops import Op, eval_composition, eval_op, identity, inverse
from app.groups.systems import SystemTemplate, TemplateId, solve_system

__all__ = [
    "DiscreteLogTable",
    "Op",
    "Prime",
    "SystemTemplate",
    "TemplateId",
    "discrete_log",
    "ensure_prime",
    "eval_composition",
    "eval_op",
    "identity",
    "inverse",
    "is_prime",
    "log_table",
    "primitive_root",
    "solve_system",
]
