"""Exhaustive and sampled checks of KA representations against exact arithmetic."""

import cmath
import itertools
import logging
import math
from collections.abc import Callable, Iterable, Sequence

import numpy as np

from app.core.exceptions import GrokLabError
from app.groups.number_theory import ensure_prime, primitive_root
from app.groups.ops import Op, eval_composition, eval_op
from app.ka.representation import (
    DECODE_TOLERANCE,
    anti_abelian_rep,
    cyclic_add_rep,
    cyclic_mul_rep,
    eval_anti_abelian,
    eval_rep,
    eval_two_factor_mul,
    two_factor_rep,
)
from app.ka.schemas import GroupKind, KaRep, VerificationFailure, VerificationReport
from app.ka.wrap import wrap

logger = logging.getLogger(__name__)

STANDARD_TWISTS = 5
MAX_REPORTED_FAILURES = 20

type TupleFn = Callable[[Sequence[int]], int]


def _oracle_op(rep: KaRep) -> Op:
    """The exact group_core operation a representation must agree with."""
    if rep.group_kind is GroupKind.ANTI_ABELIAN:
        return Op.SUB if rep.base is GroupKind.CYCLIC_ADD else Op.DIV
    return Op.ADD if rep.underlying is GroupKind.CYCLIC_ADD else Op.MUL


def _evaluate_pair(rep: KaRep, x1: int, x2: int, tol: float) -> int:
    if rep.group_kind is GroupKind.ANTI_ABELIAN:
        return eval_anti_abelian(rep, x1, x2, tol)
    if rep.group_kind is GroupKind.PRODUCT_OF_CYCLICS:
        return eval_two_factor_mul(rep, x1, x2, tol)
    return eval_rep(rep, [x1, x2], tol)


def _check(
    rep: KaRep,
    arity: int,
    tuples: Iterable[Sequence[int]],
    expected_of: TupleFn,
    evaluate: TupleFn,
) -> VerificationReport:
    checked = 0
    failures: list[VerificationFailure] = []
    for xs in tuples:
        checked += 1
        expected = expected_of(xs)
        try:
            got = evaluate(xs)
        except GrokLabError as e:
            failure = VerificationFailure(
                operands=list(xs), expected=expected, error=e.message
            )
            failures.append(failure)
            continue
        if got != expected:
            failures.append(
                VerificationFailure(operands=list(xs), expected=expected, got=got)
            )
    if failures:
        logger.warning(
            "Representation %s failed on %d of %d tuples",
            rep.label,
            len(failures),
            checked,
        )
    return VerificationReport(
        rep=rep.label,
        arity=arity,
        checked=checked,
        failed=len(failures),
        failures=failures[:MAX_REPORTED_FAILURES],
    )


def verify_rep(rep: KaRep, tol: float = DECODE_TOLERANCE) -> VerificationReport:
    """Compare a representation with group_core on every pair of its carrier.

    Args:
        rep: The representation to check.
        tol: Decode rounding tolerance.

    Returns:
        A report whose ``failures`` is empty when the representation is exact.
        At most ``MAX_REPORTED_FAILURES`` failures are listed.
    """
    op = _oracle_op(rep)
    carrier = rep.carrier
    return _check(
        rep,
        2,
        itertools.product(carrier, repeat=2),
        lambda xs: eval_op(op, xs[0], xs[1], rep.p),
        lambda xs: _evaluate_pair(rep, xs[0], xs[1], tol),
    )


def verify_universality(
    rep: KaRep,
    n: int,
    samples: int = 10_000,
    seed: int = 0,
    tol: float = DECODE_TOLERANCE,
) -> VerificationReport:
    """Check that one representation decodes random ``n``-ary tuples.

    Anti-abelian representations are checked against the left fold of their
    operation, everything else against ``eval_composition``.
    """
    rng = np.random.default_rng(seed)
    carrier = np.asarray(rep.carrier)
    draws = rng.choice(carrier, size=(samples, n))
    op = _oracle_op(rep)

    def expected(xs: Sequence[int]) -> int:
        if op.associative:
            return eval_composition(op, list(xs), rep.p)
        acc = xs[0]
        for x in xs[1:]:
            acc = eval_op(op, acc, x, rep.p)
        return acc

    return _check(
        rep,
        n,
        ([int(x) for x in row] for row in draws),
        expected,
        lambda xs: eval_rep(rep, xs, tol),
    )


def verify_wrap_identity(
    samples: int = 10_000, seed: int = 0, tol: float = 1e-10
) -> int:
    """Count samples where ``wrap(log z1 + log z2) != wrap(log(z1 z2))``.

    ``z1`` and ``z2`` are drawn with log-uniform modulus and uniform argument,
    so both are nonzero. Imaginary parts are compared on the circle.
    """
    rng = np.random.default_rng(seed)
    moduli = np.exp(rng.uniform(-3.0, 3.0, size=(samples, 2)))
    args = rng.uniform(-math.pi, math.pi, size=(samples, 2))
    mismatches = 0
    for (r1, r2), (t1, t2) in zip(moduli, args, strict=True):
        z1 = cmath.rect(float(r1), float(t1))
        z2 = cmath.rect(float(r2), float(t2))
        lhs = wrap(cmath.log(z1) + cmath.log(z2))
        rhs = wrap(cmath.log(z1 * z2))
        gap = abs(lhs.imag - rhs.imag)
        if abs(lhs.real - rhs.real) >= tol or min(gap, 2 * math.pi - gap) >= tol:
            mismatches += 1
    return mismatches


def coprime_twists(order: int, count: int) -> list[int]:
    """The first ``count`` integers ``k >= 1`` coprime with ``order``."""
    coprime = (k for k in itertools.count(1) if math.gcd(k, order) == 1)
    return list(itertools.islice(coprime, count))


def two_factor_splits(p: int) -> list[tuple[int, int]]:
    """Every nontrivial ``(q1, q2)`` with ``q1 * q2 = p - 1``."""
    n = p - 1
    return [(q, n // q) for q in range(2, n) if n % q == 0]


def standard_suite(p: int, twists: int = STANDARD_TWISTS) -> list[KaRep]:
    """Every representation the exhaustive acceptance sweep covers at ``p``."""
    ensure_prime(p)
    a = primitive_root(p)
    reps: list[KaRep] = [cyclic_add_rep(p, k) for k in coprime_twists(p, twists)]
    reps += [cyclic_mul_rep(p, k, a) for k in coprime_twists(p - 1, twists)]
    reps += [
        anti_abelian_rep(cyclic_add_rep(p)),
        anti_abelian_rep(cyclic_mul_rep(p, 1, a)),
    ]
    reps += [two_factor_rep(p, q1, q2, generator=a) for q1, q2 in two_factor_splits(p)]
    return reps


def suite_for_kinds(p: int, kinds: Sequence[GroupKind]) -> list[KaRep]:
    """Filter :func:`standard_suite` to the requested kinds."""
    wanted = set(kinds)
    return [rep for rep in standard_suite(p) if rep.group_kind in wanted]


def run_suite(
    p: int,
    kinds: Sequence[GroupKind] | None = None,
    arities: Sequence[int] = (3, 4),
    samples: int = 10_000,
    seed: int = 0,
    tol: float = DECODE_TOLERANCE,
) -> list[VerificationReport]:
    """Exhaustive pair checks for each rep, then n-ary checks on the untwisted ones."""
    reps = suite_for_kinds(p, kinds or list(GroupKind))
    reports = [verify_rep(rep, tol) for rep in reps]
    for rep in reps:
        if rep.group_kind is not GroupKind.PRODUCT_OF_CYCLICS and rep.k == 1:
            reports += [
                verify_universality(rep, n, samples, seed, tol) for n in arities
            ]
    logger.info(
        "KA suite at p=%d: %d reports, %d with failures",
        p,
        len(reports),
        sum(not r.ok for r in reports),
    )
    return reports
