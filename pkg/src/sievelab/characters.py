"""Real primitive characters via the Kronecker symbol, L(1, chi) and eta(D)."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .arith import factorize
from .zeta import hurwitz_zeta

_TAB2 = (0, 1, 0, -1, 0, -1, 0, 1)  # (2|a) indexed by a mod 8


def kronecker_symbol(d: int, n: int) -> int:
    """The Kronecker symbol (d | n) for n >= 0."""
    d, n = int(d), int(n)
    if n < 0:
        raise ValueError("kronecker_symbol is defined here for n >= 0")
    if n == 0:
        return 1 if abs(d) == 1 else 0
    if d % 2 == 0 and n % 2 == 0:
        return 0
    v = (n & -n).bit_length() - 1
    n >>= v
    k = _TAB2[d & 7] if v % 2 else 1
    # n odd and positive: Jacobi symbol (d mod n | n)
    a = d % n
    while a:
        v = (a & -a).bit_length() - 1
        a >>= v
        if v % 2:
            k *= _TAB2[n & 7]
        if a & n & 2:
            k = -k
        a, n = n % a, a
    return k if n == 1 else 0


def is_squarefree(m: int) -> bool:
    return m != 0 and all(e == 1 for e in factorize(abs(m)).values())


def is_fundamental(d: int) -> bool:
    """True iff d is a fundamental discriminant."""
    d = int(d)
    if d == 0:
        raise ValueError("d = 0 is not a discriminant")
    if d % 4 == 1:
        return is_squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


@dataclass(frozen=True)
class RealCharacter:
    """The primitive real character n -> (d | n) of a fundamental discriminant d."""

    disc: int
    _table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if abs(self.disc) < 3 or not is_fundamental(self.disc):
            raise ValueError(f"{self.disc} is not a fundamental discriminant with |d| >= 3")
        table = np.array([kronecker_symbol(self.disc, a) for a in range(self.modulus)], dtype=np.int8)
        table.flags.writeable = False
        object.__setattr__(self, "_table", table)

    @property
    def modulus(self) -> int:
        return abs(self.disc)

    def __call__(self, n: int) -> int:
        return int(self._table[int(n) % self.modulus])

    def values(self, N: int) -> np.ndarray:
        """chi(n) for 0 <= n <= N as a 1-based int64 sequence (slot 0 is 0)."""
        out = self._table[np.arange(N + 1) % self.modulus].astype(np.int64)
        out[0] = 0
        return out

    @cached_property
    def L1(self) -> float:
        return l_one(self)

    @cached_property
    def eta(self) -> float:
        return eta(self)


def _power_sum_bound(k: int, s: int) -> float:
    # sum_{j >= k} j^{-s} <= k^{-s} + k^{1-s}/(s-1)
    return k ** (-s) + k ** (1 - s) / (s - 1)


def l_one_with_bound(chi: RealCharacter, tol: float = 1e-13, moments: int = 8) -> tuple[float, float]:
    """L(1, chi) and a rigorous bound on the truncation error.

    Sums chi(n)/n over n <= kD, then expands the tail block by block using
    sum_{a <= D} chi(a) = 0:

        sum_{j>=k} sum_a chi(a)/(jD + a)
            = sum_{m>=1} (-1)^m (sum_a chi(a) (a/D)^m / D) zeta(m + 1, k).

    Terms past ``moments`` are bounded by sum_{j>=k} j^{-(moments+2)}/(1 - 1/k).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    D = chi.modulus
    k = 2
    while _power_sum_bound(k, moments + 2) / (1 - 1 / k) > tol / 2:
        k *= 2
    M = k * D
    n = np.arange(1, M + 1, dtype=np.float64)
    chis = chi.values(M)[1:].astype(np.float64)
    partial = float(np.sum(chis / n))

    a = np.arange(1, D + 1, dtype=np.float64)
    ca = chi.values(D)[1:].astype(np.float64)
    tail = 0.0
    for m in range(1, moments + 1):
        moment = float(np.sum(ca * (a / D) ** m)) / D
        tail += (-1) ** m * moment * hurwitz_zeta(m + 1, k)
    bound = _power_sum_bound(k, moments + 2) / (1 - 1 / k) + 1e-16 * math.log(M)
    return partial + tail, bound


def l_one(chi: RealCharacter, tol: float = 1e-13) -> float:
    """L(1, chi) to within ``tol``."""
    return l_one_with_bound(chi, tol)[0]


def eta(chi: RealCharacter) -> float:
    """L(1, chi) log D, the exceptionality measure."""
    D = chi.modulus
    if D < 3:
        raise ValueError("eta needs D >= 3")
    return chi.L1 * math.log(D)


def fundamental_discriminants(d_min: int, d_max: int) -> list[int]:
    """Fundamental d of either sign with d_min <= |d| <= d_max, |d| >= 3."""
    out = []
    for D in range(max(d_min, 3), d_max + 1):
        for d in (D, -D):
            if is_fundamental(d):
                out.append(d)
    return out


def scan_exceptional(d_min: int, d_max: int, top_n: int, threads: int = 1) -> list[tuple[int, float, float]]:
    """Rank fundamental discriminants with |d| in [d_min, d_max] by eta.

    Returns ``(disc, L1, eta)`` ascending by eta, ties by |d| then sign.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    discs = fundamental_discriminants(d_min, d_max)

    def evaluate(d):
        chi = RealCharacter(d)
        return d, chi.L1, chi.eta

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(evaluate, discs))
    else:
        rows = [evaluate(d) for d in discs]
    rows.sort(key=lambda r: (r[2], abs(r[0]), r[0]))
    return rows[:top_n]
