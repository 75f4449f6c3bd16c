"""Embeddings phi = log(rho) and decoders psi for cyclic groups over Z_p.

A cyclic group of order ``q`` with twist ``k`` embeds ``x`` with discrete
coordinate ``e`` as ``2πi e k / q``. Sums of embeddings are decoded by wrapping
the imaginary part into [0, 2π), rescaling by ``q / 2π``, rounding, and
undoing the twist with ``k^-1 mod q``. The additive group uses ``e = x`` and
``q = p``; the multiplicative group uses ``e = lg_a(x)`` and ``q = p - 1``.
"""

import math
from collections.abc import Sequence

import numpy as np

from app.core.exceptions import (
    ConfigError,
    GcdViolationError,
    NonIntegerDecodingError,
    NotAGroupError,
    NotInGroupError,
)
from app.groups.number_theory import (
    check_residue,
    ensure_prime,
    log_table,
    primitive_root,
)
from app.ka.schemas import Embedding2m, GroupKind, KaRep
from app.ka.wrap import TWO_PI, wrap

DECODE_TOLERANCE = 1e-6


def _require_coprime(k: int, order: int, what: str) -> None:
    if math.gcd(k, order) != 1:
        raise GcdViolationError(
            f"{what} twist k={k} is not coprime with {order}",
            details={"k": k, "order": order},
        )


def cyclic_add_rep(p: int, k: int = 1) -> KaRep:
    """Representation of (Z_p, +) with twist ``k`` coprime with ``p``."""
    ensure_prime(p)
    _require_coprime(k, p, "additive")
    return KaRep(group_kind=GroupKind.CYCLIC_ADD, p=p, k=k)


def cyclic_mul_rep(p: int, k: int = 1, generator: int | None = None) -> KaRep:
    """Representation of (Z_p*, ×) through the discrete log to ``generator``."""
    ensure_prime(p)
    a = generator if generator is not None else primitive_root(p)
    log_table(a, p)  # rejects non-generators
    _require_coprime(k, p - 1, "multiplicative")
    return KaRep(group_kind=GroupKind.CYCLIC_MUL, p=p, k=k, generator=a)


def two_factor_rep(
    p: int,
    q1: int,
    q2: int,
    k1: int = 1,
    k2: int = 1,
    generator: int | None = None,
) -> KaRep:
    """Two-component representation of (Z_p*, ×) with ``q1 * q2 = p - 1``.

    The discrete log ``e = b q1 + r`` is split into a remainder digit ``r``
    (period ``q1``, twist ``k2``) and a quotient digit ``b`` (period ``q2``,
    twist ``k1``).
    """
    ensure_prime(p)
    if q1 * q2 != p - 1 or 1 in (q1, q2):
        raise ConfigError(
            f"({q1}, {q2}) is not a nontrivial split of {p - 1}",
            details={"q1": q1, "q2": q2, "p": p},
        )
    a = generator if generator is not None else primitive_root(p)
    log_table(a, p)
    _require_coprime(k1, q2, "quotient digit")
    _require_coprime(k2, q1, "remainder digit")
    return KaRep(
        group_kind=GroupKind.PRODUCT_OF_CYCLICS,
        p=p,
        k=k1,
        k2=k2,
        generator=a,
        factors=(q1, q2),
    )


def anti_abelian_rep(base: KaRep) -> KaRep:
    """Representation of ``x1 ∘ x2^-1`` reusing the embedding of ``base``."""
    if base.group_kind not in {GroupKind.CYCLIC_ADD, GroupKind.CYCLIC_MUL}:
        raise NotAGroupError(
            f"anti-abelian reps need a cyclic base, got {base.group_kind}",
            details={"base": str(base.group_kind)},
        )
    return KaRep(
        group_kind=GroupKind.ANTI_ABELIAN,
        p=base.p,
        k=base.k,
        generator=base.generator,
        base=base.group_kind,
    )


def _coordinate(rep: KaRep, x: int) -> int:
    """The integer coordinate of ``x``: itself, or its discrete log."""
    check_residue(x, rep.p, "x")
    if not rep.multiplicative:
        return x
    if x == 0:
        raise NotInGroupError(
            "0 is outside the multiplicative group", details={"x": x, "p": rep.p}
        )
    assert rep.generator is not None  # noqa: S101
    return log_table(rep.generator, rep.p).log(x)


def _angle(e: int, k: int, order: int) -> complex:
    return complex(0.0, TWO_PI * e * k / order)


def phi(rep: KaRep, x: int) -> Embedding2m:
    """Embed ``x`` as log(rho(x)), one purely imaginary entry per cyclic factor."""
    e = _coordinate(rep, x)
    if rep.group_kind is GroupKind.PRODUCT_OF_CYCLICS:
        assert rep.factors is not None  # noqa: S101
        q1, q2 = rep.factors
        b, r = divmod(e, q1)
        parts = [_angle(b, rep.k, q2), _angle(r, rep.k2, q1)]
    elif rep.multiplicative:
        parts = [_angle(e, rep.k, rep.p - 1)]
    else:
        parts = [_angle(e, rep.k, rep.p)]
    return Embedding2m(np.array(parts, dtype=np.complex128))


def _rounded(t: float, tol: float, context: str) -> int:
    n = round(t)
    if abs(t - n) >= tol:
        raise NonIntegerDecodingError(
            f"{context}: {t!r} is not within {tol} of an integer",
            details={"value": t, "tolerance": tol},
        )
    return n


def _decode_cyclic(w: complex, order: int, k: int, tol: float) -> int:
    """Wrap, rescale by order/2π, round, reduce, then undo the twist."""
    t = wrap(w).imag * order / TWO_PI
    n = _rounded(t, tol, "wrapped coordinate") % order
    return n * pow(k, -1, order) % order


def _carried_turns(w: complex, order: int, k: int, tol: float) -> int:
    """Whole turns of the untwisted component ``w / k`` (the carry R)."""
    digits = _rounded(w.imag * order / (TWO_PI * k), tol, "remainder digits")
    return digits // order


def psi(rep: KaRep, z: Embedding2m, tol: float = DECODE_TOLERANCE) -> int:
    """Decode an embedding sum back to a residue mod ``p``.

    Args:
        rep: The representation that produced the summands.
        z: Sum (or difference) of embeddings.
        tol: Maximum distance from an integer accepted when rounding.

    Returns:
        The decoded residue.
    """
    if z.m != rep.m or not np.all(np.isfinite(z.components.view(np.float64))):
        raise NonIntegerDecodingError(
            "embedding has the wrong width or non-finite entries",
            details={"m": z.m, "expected_m": rep.m},
        )
    w = complex(z.components[0])
    if rep.group_kind is GroupKind.PRODUCT_OF_CYCLICS:
        assert rep.factors is not None  # noqa: S101
        assert rep.generator is not None  # noqa: S101
        q1, q2 = rep.factors
        low = complex(z.components[1])
        r = _decode_cyclic(low, q1, rep.k2, tol)
        turns = _carried_turns(low, q1, rep.k2, tol)
        b = _decode_cyclic(w + _angle(turns, rep.k, q2), q2, rep.k, tol)
        return log_table(rep.generator, rep.p).exp(b * q1 + r)
    if rep.multiplicative:
        assert rep.generator is not None  # noqa: S101
        e = _decode_cyclic(w, rep.p - 1, rep.k, tol)
        return log_table(rep.generator, rep.p).exp(e)
    return _decode_cyclic(w, rep.p, rep.k, tol)


def eval_rep(rep: KaRep, xs: Sequence[int], tol: float = DECODE_TOLERANCE) -> int:
    """Evaluate ``x1 ∘ ... ∘ xn`` as psi of the summed embeddings.

    For anti-abelian reps the later operands are subtracted, which evaluates the
    left fold ``((x1 • x2) • x3) ...``.
    """
    if not xs:
        raise NotInGroupError("at least one operand is required", details={"n": 0})
    embeddings = [phi(rep, x) for x in xs]
    total = embeddings[0]
    for e in embeddings[1:]:
        total = total - e if rep.group_kind is GroupKind.ANTI_ABELIAN else total + e
    return psi(rep, total, tol)


def eval_anti_abelian(
    rep: KaRep, x1: int, x2: int, tol: float = DECODE_TOLERANCE
) -> int:
    """Evaluate ``x1 ∘ x2^-1`` as psi(phi(x1) - phi(x2))."""
    if rep.underlying not in {GroupKind.CYCLIC_ADD, GroupKind.CYCLIC_MUL}:
        raise NotAGroupError(
            f"{rep.group_kind} has no anti-abelian evaluation",
            details={"rep": rep.label},
        )
    return psi(rep, phi(rep, x1) - phi(rep, x2), tol)


def eval_two_factor_mul(
    rep: KaRep, x1: int, x2: int, tol: float = DECODE_TOLERANCE
) -> int:
    """Evaluate ``x1 * x2 mod p`` through the two-component representation."""
    if rep.group_kind is not GroupKind.PRODUCT_OF_CYCLICS:
        raise NotAGroupError(
            "two-factor evaluation needs a product_of_cyclics rep",
            details={"rep": rep.label},
        )
    return psi(rep, phi(rep, x1) + phi(rep, x2), tol)
