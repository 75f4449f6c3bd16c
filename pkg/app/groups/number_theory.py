"""Primes, primitive roots and discrete logarithms for small moduli."""

from dataclasses import dataclass
from functools import lru_cache
from typing import Annotated

from pydantic import AfterValidator

from app.core.exceptions import NotInGroupError, NotPrimeError, OperandOutOfRangeError

SMALLEST_ODD_PRIME = 3


@lru_cache(maxsize=256)
def is_prime(n: int) -> bool:
    """Trial-division primality test (moduli here are small)."""
    if n < 2:  # noqa: PLR2004
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def ensure_prime(p: int) -> int:
    """Return ``p`` unchanged or raise NotPrimeError."""
    if not is_prime(p):
        raise NotPrimeError(f"{p} is not prime", details={"p": p})
    return p


def _validate_prime(p: int) -> int:
    if not is_prime(p):
        msg = f"{p} is not prime"
        raise ValueError(msg)
    return p


# Use in pydantic models; plain functions call ensure_prime instead
Prime = Annotated[int, AfterValidator(_validate_prime)]


def check_residue(x: int, p: int, name: str = "operand") -> int:
    """Raise OperandOutOfRangeError unless 0 <= x < p."""
    if not 0 <= x < p:
        raise OperandOutOfRangeError(
            f"{name} {x} is not a residue mod {p}", details={name: x, "p": p}
        )
    return x


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of ``n`` in increasing order."""
    factors: list[int] = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        factors.append(n)
    return factors


def multiplicative_order(a: int, p: int) -> int:
    """Order of ``a`` in the multiplicative group mod ``p``."""
    ensure_prime(p)
    if a % p == 0:
        raise NotInGroupError("0 has no multiplicative order", details={"a": a, "p": p})
    order, x = 1, a % p
    while x != 1:
        x = x * a % p
        order += 1
    return order


def is_primitive_root(a: int, p: int) -> bool:
    """Whether ``a`` generates the multiplicative group mod ``p``."""
    if a % p == 0:
        return False
    return all(pow(a, (p - 1) // q, p) != 1 for q in prime_factors(p - 1))


@lru_cache(maxsize=64)
def primitive_root(p: int) -> int:
    """Smallest generator of the multiplicative group mod ``p``.

    Args:
        p: An odd prime.

    Returns:
        The least ``a`` whose multiplicative order is ``p - 1``.
    """
    ensure_prime(p)
    if p < SMALLEST_ODD_PRIME:
        raise NotPrimeError("primitive_root requires p >= 3", details={"p": p})
    for a in range(2, p):
        if is_primitive_root(a, p):
            return a
    raise NotPrimeError(  # pragma: no cover
        f"no primitive root mod {p}", details={"p": p}
    )


@dataclass(frozen=True, slots=True)
class DiscreteLogTable:
    """Full power/log tables for one generator of the multiplicative group."""

    p: int
    generator: int
    powers: tuple[int, ...]
    logs: dict[int, int]

    def log(self, x: int) -> int:
        """Exponent e in [0, p-2] with generator**e == x (mod p)."""
        check_residue(x, self.p, "x")
        if x == 0:
            raise NotInGroupError(
                "0 has no discrete logarithm", details={"x": x, "p": self.p}
            )
        return self.logs[x]

    def exp(self, e: int) -> int:
        """generator**e mod p for any integer exponent."""
        return self.powers[e % (self.p - 1)]


@lru_cache(maxsize=64)
def log_table(generator: int, p: int) -> DiscreteLogTable:
    """Build (and cache) the O(p) log table for ``generator`` mod ``p``."""
    ensure_prime(p)
    if not is_primitive_root(generator, p):
        raise NotInGroupError(
            f"{generator} is not a primitive root mod {p}",
            details={"generator": generator, "p": p},
        )
    powers = [1]
    for _ in range(p - 2):
        powers.append(powers[-1] * generator % p)
    logs = {x: e for e, x in enumerate(powers)}
    return DiscreteLogTable(p=p, generator=generator, powers=tuple(powers), logs=logs)


def discrete_log(a: int, x: int, p: int) -> int:
    """Discrete logarithm of ``x`` to base ``a`` mod ``p``.

    Args:
        a: A primitive root mod ``p``.
        x: A nonzero residue.
        p: The prime modulus.

    Returns:
        The unique exponent ``e`` in [0, p-2] with ``a**e == x (mod p)``.
    """
    return log_table(a, p).log(x)
