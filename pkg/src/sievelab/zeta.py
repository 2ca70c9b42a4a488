"""Riemann and Hurwitz zeta on the real line by Euler-Maclaurin summation."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import bernoulli, gamma

_TERMS = 12
# B_2, B_4, ..., B_24 divided by (2k)!
_BCOEF = np.array(
    [bernoulli(2 * k)[2 * k] / math.factorial(2 * k) for k in range(1, _TERMS + 1)]
)


def _cutoff(s: float) -> int:
    return 24 + int(math.ceil(abs(s)))


def _tail_corrections(s: float, a: float) -> float:
    # Euler-Maclaurin boundary terms at the point a for sum_{n>=0} (n+a)^{-s}
    total = a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** (-s)
    rising = s  # s(s+1)...(s+2k-2)
    power = a ** (-s - 1.0)
    for k in range(_TERMS):
        total += _BCOEF[k] * rising * power
        rising *= (s + 2 * k + 1) * (s + 2 * k + 2)
        power /= a * a
    return total


def hurwitz_zeta(s: float, a: float) -> float:
    """sum_{n>=0} (n + a)^{-s} for real s != 1 and a > 0 (continued for s < 1)."""
    s = float(s)
    if s == 1.0:
        raise ValueError("hurwitz_zeta has a pole at s = 1")
    if a <= 0:
        raise ValueError("hurwitz_zeta needs a > 0")
    N = _cutoff(s)
    head = np.sum((np.arange(N, dtype=np.float64) + a) ** (-s))
    return float(head + _tail_corrections(s, a + N))


def zeta(s: float) -> float:
    """Riemann zeta at real s != 1.

    For s < 0 the functional equation is used; direct summation there
    cancels badly.
    """
    s = float(s)
    if s < 0.0:
        if s == math.floor(s) and int(s) % 2 == 0:
            return 0.0
        return float(
            2.0**s * math.pi ** (s - 1.0) * math.sin(math.pi * s / 2.0) * gamma(1.0 - s) * hurwitz_zeta(1.0 - s, 1.0)
        )
    return hurwitz_zeta(s, 1.0)


def zeta_regular_part(s: float) -> float:
    """zeta(s) - 1/(s - 1), evaluated without cancellation near s = 1.

    Tends to Euler's constant as s -> 1.
    """
    s = float(s)
    N = _cutoff(s)
    head = np.sum(np.arange(1, N, dtype=np.float64) ** (-s))
    d = s - 1.0
    x = N
    # N^{1-s}/(s-1) - 1/(s-1) = expm1(-d log N)/d, finite at d = 0
    pole_part = -math.log(x) if d == 0.0 else math.expm1(-d * math.log(x)) / d
    rest = _tail_corrections(s, float(x)) - x ** (1.0 - s) / (s - 1.0) if d != 0.0 else None
    if rest is None:
        rest = 0.5 / x
        rising = 1.0
        power = x ** -2.0
        for k in range(_TERMS):
            rest += _BCOEF[k] * rising * power
            rising *= (2 * k + 2) * (2 * k + 3)
            power /= x * x
    return float(head + pole_part + rest)


def zeta_many(values) -> np.ndarray:
    return np.array([zeta(v) for v in np.ravel(values)]).reshape(np.shape(values))
