"""Complex Airy function and the rotated solutions of y'' = x y.

Values come from the AMOS routines wrapped by :func:`scipy.special.airy`,
which handle the series, asymptotic and connection-formula regimes
internally. Everything here accepts scalars or numpy arrays.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import InvalidArgumentError, PrecisionWarning

OMEGA = np.exp(2j * np.pi / 3)

AI0 = 3.0 ** (-2.0 / 3.0) / special.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / special.gamma(1.0 / 3.0)


class AiryPair(NamedTuple):
    ai: complex | np.ndarray
    ai_prime: complex | np.ndarray


def _ai_raw(z):
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise InvalidArgumentError("Airy function argument must be finite")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", special.SpecialFunctionWarning)
        with special.errstate(all="ignore", loss="warn"):
            ai, aip, _, _ = special.airy(z)
    if caught or not (np.all(np.isfinite(ai)) and np.all(np.isfinite(aip))):
        warnings.warn("Airy evaluation lost precision", PrecisionWarning, stacklevel=3)
    return ai, aip


def ai_and_prime(z):
    """Return ``(Ai(z), Ai'(z))`` as complex arrays (or complex scalars)."""
    ai, aip = _ai_raw(z)
    if np.ndim(ai) == 0:
        return complex(ai), complex(aip)
    return ai, aip


def airy_ai(z) -> AiryPair:
    """Ai and Ai' at complex ``z``.

    >>> round(airy_ai(0).ai.real, 8)
    0.35502805
    """
    return AiryPair(*ai_and_prime(z))


def rotated_solution(k: int, z) -> AiryPair:
    """``y_k(z) = w^k Ai(w^k z)`` with ``w = exp(2 pi i / 3)``, and its derivative.

    The derivative is ``w^(2k) Ai'(w^k z)``. The three solutions sum to zero.
    """
    if k not in (0, 1, 2):
        raise InvalidArgumentError(f"rotation index must be 0, 1 or 2, got {k!r}")
    rot = OMEGA**k
    ai, aip = ai_and_prime(rot * np.asarray(z, dtype=complex))
    return AiryPair(rot * ai, rot * rot * aip)


def airy_taylor(y, order: int):
    """Normalised Taylor coefficients ``Ai^(n)(y) / n!`` for n = 0..order.

    Uses the recursion implied by Ai'' = y Ai. Returns an array with the
    coefficient index along the first axis.
    """
    y = np.asarray(y, dtype=complex)
    ai, aip = _ai_raw(y)
    coef = np.empty((order + 1,) + y.shape, dtype=complex)
    coef[0] = ai
    if order >= 1:
        coef[1] = aip
    for n in range(0, order - 1):
        prev = coef[n - 1] if n >= 1 else 0.0
        coef[n + 2] = (y * coef[n] + prev) / ((n + 2) * (n + 1))
    return coef
