"""Combinatorial sieve weights xi_q and their divisor sums theta(m)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _kernels
from .arith import factorize, primes_up_to

BETA = 2
MAX_SUPPORT = 5_000_000


class DegenerateWeightsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SieveWeights:
    """xi_q = mu(q) on a support set of squarefree q | P(z), q < y.

    ``support`` is sorted ascending and ``xi`` is aligned with it.
    """

    z: float
    y: float
    excluded: frozenset
    parity: str
    construction: str
    primes: tuple  # the sifting primes p < z, p not excluded
    support: np.ndarray
    xi: np.ndarray

    @cached_property
    def weights(self) -> dict[int, int]:
        return dict(zip(self.support.tolist(), self.xi.tolist()))

    def __len__(self) -> int:
        return self.support.size

    def xi_of(self, q: int) -> int:
        return self.weights.get(int(q), 0)


def brun_level(z: float, y: float, parity: str) -> int:
    """Largest t of the parity's sign (even for upper, odd for lower) with z^t <= y."""
    t = 0
    while z ** (t + 1) <= y:
        t += 1
    if (t % 2 == 1) == (parity == "upper"):
        t -= 1
    return t


def _brun_support(primes, t):
    out = [(1, 0)]
    frontier = [(1, 0, -1)]  # product, omega, index of largest prime used
    while frontier:
        nxt = []
        for q, w, last in frontier:
            if w == t:
                continue
            for i in range(last + 1, len(primes)):
                nxt.append((q * primes[i], w + 1, i))
        out += [(q, w) for q, w, _ in nxt]
        frontier = nxt
        if len(out) > MAX_SUPPORT:
            raise MemoryError("sieve support exceeds MAX_SUPPORT")
    return out


def _beta_support(primes, y, parity):
    # q = p1 p2 ... pr with p1 > p2 > ... > pr; for every position m with the
    # parity's truncation index (odd for upper, even for lower) require
    # p1...p_{m-1} p_m^{BETA+1} < y
    checked = 1 if parity == "upper" else 0
    out = [(1, 0)]
    stack = [(1, 0, len(primes))]  # product, length, primes allowed below this index
    while stack:
        q, r, top = stack.pop()
        m = r + 1
        for i in range(top):
            p = primes[i]
            if m % 2 == checked and q * p ** (BETA + 1) >= y:
                break
            qp = q * p
            if qp >= y:
                break
            out.append((qp, m))
            stack.append((qp, m, i))
        if len(out) > MAX_SUPPORT:
            raise MemoryError("sieve support exceeds MAX_SUPPORT")
    return out


def build_weights(
    z: float,
    y: float,
    excluded=(),
    parity: str = "upper",
    construction: str = "brun",
) -> SieveWeights:
    """Sieve weights of level y and range P(z) with the given primes removed.

    ``brun`` keeps every q | P(z) with omega(q) <= t, t from :func:`brun_level`.
    ``beta`` uses the beta = 2 combinatorial sieve support sets.
    """
    if parity not in ("upper", "lower"):
        raise ValueError(f"parity must be 'upper' or 'lower', got {parity!r}")
    if construction not in ("brun", "beta"):
        raise ValueError(f"construction must be 'brun' or 'beta', got {construction!r}")
    if z < 2:
        raise ValueError(f"z must be >= 2, got {z}")
    if y < z:
        raise ValueError(f"level y={y} must be >= z={z}")
    excluded = frozenset(int(p) for p in excluded)
    primes = tuple(int(p) for p in primes_up_to(math.ceil(z) - 1) if p < z and int(p) not in excluded)
    if construction == "brun":
        t = brun_level(z, y, parity)
        if t == 0:
            warnings.warn(
                f"brun weights with z={z}, y={y} have t=0; theta is identically 1",
                DegenerateWeightsWarning,
                stacklevel=2,
            )
        pairs = _brun_support(primes, t)
    else:
        pairs = _beta_support(primes, y, parity)
    pairs.sort()
    support = np.array([q for q, _ in pairs], dtype=np.int64)
    xi = np.array([-1 if w % 2 else 1 for _, w in pairs], dtype=np.int64)
    support.flags.writeable = False
    xi.flags.writeable = False
    return SieveWeights(
        z=z,
        y=y,
        excluded=excluded,
        parity=parity,
        construction=construction,
        primes=primes,
        support=support,
        xi=xi,
    )


def theta(m: int, w: SieveWeights) -> int:
    """theta(m) = sum of xi_q over q | m."""
    ps = [p for p in factorize(m) if p in set(w.primes)] if m > 1 else []
    total = 0
    divisors = [1]
    for p in ps:
        divisors += [d * p for d in divisors]
    weights = w.weights
    for d in divisors:
        total += weights.get(d, 0)
    return total


def theta_table(w: SieveWeights, N: int) -> np.ndarray:
    """theta(m) for 1 <= m <= N as a 1-based int64 sequence."""
    out = np.zeros(N + 1, dtype=np.int64)
    _kernels.divisor_accumulate(w.support, w.xi, out)
    out[0] = 0
    return out


def unsifted_indicator(w: SieveWeights, N: int) -> np.ndarray:
    """[gcd(m, P(z)) = 1] for 1 <= m <= N (slot 0 is 0)."""
    ind = np.ones(N + 1, dtype=np.int64)
    ind[0] = 0
    for p in w.primes:
        ind[p::p] = 0
    return ind


class ThetaViolation(NamedTuple):
    m: int
    theta: int
    indicator: int
    rule: str


def verify_theta(w: SieveWeights, N: int) -> list[ThetaViolation]:
    """All m <= N breaking the sieve inequality of the weights' parity.

    Upper: theta(m) >= 0 and theta(m) >= [gcd(m, P(z)) = 1].
    Lower: theta(m) <= [gcd(m, P(z)) = 1].
    """
    th = theta_table(w, N)
    ind = unsifted_indicator(w, N)
    out = []
    if w.parity == "upper":
        for m in np.flatnonzero(th[1:] < 0) + 1:
            out.append(ThetaViolation(int(m), int(th[m]), int(ind[m]), "theta>=0"))
        for m in np.flatnonzero(th[1:] < ind[1:]) + 1:
            out.append(ThetaViolation(int(m), int(th[m]), int(ind[m]), "theta>=indicator"))
    else:
        for m in np.flatnonzero(th[1:] > ind[1:]) + 1:
            out.append(ThetaViolation(int(m), int(th[m]), int(ind[m]), "theta<=indicator"))
    return out


def verify_theta_nonneg(w: SieveWeights, N: int) -> list[ThetaViolation]:
    if w.parity != "upper":
        raise ValueError("theta >= 0 is an upper-bound sieve property")
    return verify_theta(w, N)


def rebuild_excluding(w: SieveWeights, extra) -> SieveWeights:
    return build_weights(w.z, w.y, w.excluded | set(extra), w.parity, w.construction)


class ProbeResult(NamedTuple):
    lhs: int
    rhs: int
    holds: bool


def theta_monotonicity_probe(a: int, b: int, w: SieveWeights) -> ProbeResult:
    """Compare theta(ab) with theta(a) for weights that also sift out b's primes."""
    lhs = theta(a * b, w)
    extra = set(factorize(b)) if b > 1 else set()
    rhs = theta(a, rebuild_excluding(w, extra) if extra & set(w.primes) else w)
    return ProbeResult(lhs, rhs, lhs <= rhs)


class MonotonicitySweep(NamedTuple):
    pairs: int
    violations: int
    fraction: float
    examples: list


def monotonicity_sweep(w: SieveWeights, a_max: int, b_max: int, keep: int = 10) -> MonotonicitySweep:
    """Run the probe over all 1 <= a <= a_max, 1 <= b <= b_max."""
    th_ab = theta_table(w, a_max * b_max)
    sifting = set(w.primes)
    by_primes: dict[frozenset, np.ndarray] = {}
    violations = 0
    examples = []
    for b in range(1, b_max + 1):
        key = frozenset(p for p in (factorize(b) if b > 1 else {}) if p in sifting)
        if key not in by_primes:
            by_primes[key] = theta_table(rebuild_excluding(w, key) if key else w, a_max)
        rhs = by_primes[key][1:]
        lhs = th_ab[b : a_max * b + 1 : b]
        bad = np.flatnonzero(lhs > rhs)
        violations += bad.size
        for i in bad[: max(0, keep - len(examples))]:
            examples.append((int(i + 1), b, int(lhs[i]), int(rhs[i])))
    pairs = a_max * b_max
    return MonotonicitySweep(pairs, violations, violations / pairs, examples)
