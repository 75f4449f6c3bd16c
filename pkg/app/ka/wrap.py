"""The wrapping map T(a + bi) = a + i (b mod 2π)."""

import math

import numpy as np
from numpy.typing import NDArray

TWO_PI = 2.0 * math.pi


def wrap(z: complex) -> complex:
    """Reduce the imaginary part of ``z`` into [0, 2π); keep the real part.

    Args:
        z: Any complex number.

    Returns:
        ``z.real + i * (z.imag mod 2π)`` with the mathematical modulo.
    """
    b = z.imag % TWO_PI
    # float % can round up to the modulus itself for tiny negative inputs
    if b >= TWO_PI:
        b = 0.0
    return complex(z.real, b)


def wrap_array(z: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Vectorised :func:`wrap`."""
    b = np.mod(z.imag, TWO_PI)
    b = np.where(b >= TWO_PI, 0.0, b)
    return z.real + 1j * b

