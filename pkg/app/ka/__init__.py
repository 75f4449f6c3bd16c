"""Exact Kolmogorov-Arnold representations of finite group operations."""

from app.ka.representation import (
    DECODE_TOLERANCE,
    anti_abelian_rep,
    cyclic_add_rep,
    cyclic_mul_rep,
    eval_anti_abelian,
    eval_rep,
    eval_two_factor_mul,
    phi,
    psi,
    two_factor_rep,
)
from app.ka.schemas import (
    Embedding2m,
    GroupKind,
    KaRep,
    VerificationFailure,
    VerificationReport,
)
from app.ka.verify import (
    coprime_twists,
    run_suite,
    standard_suite,
    two_factor_splits,
    verify_rep,
    verify_universality,
    verify_wrap_identity,
)
from app.ka.wrap import TWO_PI, wrap, wrap_array

__all__ = [
    "DECODE_TOLERANCE",
    "TWO_PI",
    "Embedding2m",
    "GroupKind",
    "KaRep",
    "VerificationFailure",
    "VerificationReport",
    "anti_abelian_rep",
    "coprime_twists",
    "cyclic_add_rep",
    "cyclic_mul_rep",
    "eval_anti_abelian",
    "eval_rep",
    "eval_two_factor_mul",
    "phi",
    "psi",
    "run_suite",
    "standard_suite",
    "two_factor_rep",
    "two_factor_splits",
    "verify_rep",
    "verify_universality",
    "verify_wrap_identity",
    "wrap",
    "wrap_array",
]
