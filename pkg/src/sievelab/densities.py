"""Deformed divisor weights gamma(d), their zeta-product series, sieve densities g_eps
and the Hardy-Littlewood constants B, C(h)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import exp1

from .arith import (
    build_window,
    euler_phi,
    factorize,
    iter_prime_chunks,
    multiplicative_table,
    prime_divisors,
)
from .weights import SieveWeights
from .zeta import zeta


@dataclass(frozen=True)
class DensityParams:
    """Deformation data: eps_0 = 0 and eps_i = i / log z for 1 <= i <= r.

    ``eps`` may be passed explicitly (length r + 1, eps[0] == 0) for
    degenerate or custom deformations.
    """

    z: float = math.e
    r: int = 17
    eps: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.eps is None:
            if self.z <= 1:
                raise ValueError("z must exceed 1")
            eps = np.arange(self.r + 1) / math.log(self.z)
        else:
            eps = np.asarray(self.eps, dtype=np.float64)
            if eps.shape != (self.r + 1,) or eps[0] != 0.0:
                raise ValueError("eps must have length r + 1 with eps[0] == 0")
        eps = np.array(eps, dtype=np.float64)
        eps.flags.writeable = False
        object.__setattr__(self, "eps", eps)

    @property
    def shifts(self) -> np.ndarray:
        """eps_1, ..., eps_r."""
        return self.eps[1:]

    @property
    def distinct(self) -> bool:
        return bool(np.all(np.diff(np.sort(self.eps[1:])) > 0)) and bool(np.all(self.eps[1:] != 0))

    @property
    def small(self) -> bool:
        """The regime eps_r < 1/2 in which every series below converges at s >= 0."""
        return float(np.max(self.eps)) < 0.5


# ---------------------------------------------------------------------------
# gamma(d)


def _homogeneous(xs: np.ndarray, amax: int) -> np.ndarray:
    """Complete homogeneous symmetric polynomials h_0..h_amax of each row of xs."""
    H = np.zeros((xs.shape[0], amax + 1))
    H[:, 0] = 1.0
    for j in range(xs.shape[1]):
        xj = xs[:, j]
        for k in range(1, amax + 1):
            H[:, k] += xj * H[:, k - 1]
    return H


def gamma_prime_power(p, e, params: DensityParams) -> np.ndarray:
    """gamma(p^e) = (1 - 1/p) * sum over weak compositions of e of p^{sum a_i eps_i}."""
    p = np.atleast_1d(np.asarray(p, dtype=np.int64))
    e = np.atleast_1d(np.asarray(e, dtype=np.int64))
    pairs, inverse = np.unique(np.stack([p, e]), axis=1, return_inverse=True)
    up = pairs[0].astype(np.float64)
    ue = pairs[1]
    xs = up[:, None] ** params.shifts[None, :]
    H = _homogeneous(xs, int(ue.max()))
    vals = np.where(ue == 0, 1.0, H[np.arange(up.size), ue] * (1.0 - 1.0 / up))
    return vals[inverse.ravel()]


def gamma_coeff(d: int, params: DensityParams) -> float:
    out = 1.0
    for p, e in factorize(d).items():
        out *= float(gamma_prime_power(p, e, params)[0])
    return out


def gamma_table(N: int, params: DensityParams) -> np.ndarray:
    """gamma(d) for 1 <= d <= N as a 1-based sequence."""
    out = np.zeros(N + 1)
    out[1:] = multiplicative_table(1, N, lambda p, e: gamma_prime_power(p, e, params))
    return out


# ---------------------------------------------------------------------------
# generating series D(s)


class SeriesCheck(NamedTuple):
    lhs: float
    rhs: float
    gap: float
    tail_bound: float
    ok: bool


def rankin_tail_bound(X: float, sigma: float, r: int, grid: int = 400) -> float:
    """Upper bound for sum_{d > X} tau_r(d) d^{-sigma}, sigma > 1.

    Rankin: for 0 < delta < sigma - 1 the tail is at most X^{-delta} zeta(sigma - delta)^r.
    """
    if sigma <= 1:
        raise ValueError("tail bound needs sigma > 1")
    deltas = (sigma - 1) * np.linspace(0.02, 0.98, grid)
    logs = [-d * math.log(X) + r * math.log(zeta(sigma - d)) for d in deltas]
    return math.exp(min(logs))


def d_series_check(s: float, params: DensityParams, cutoff: int) -> SeriesCheck:
    """Compare sum_{d <= cutoff} gamma(d)/(phi(d) d^s) with prod_i zeta(s + 1 - eps_i).

    The gap (rhs - lhs) is the series tail, which is nonnegative and at most
    sum_{d > cutoff} tau_r(d) d^{eps_r - s - 1}.
    """
    sigma = s + 1.0 - float(np.max(params.shifts))
    if sigma <= 1.0:
        raise ValueError(f"series diverges: s + 1 - eps_r = {sigma:.4f} <= 1")
    gam = gamma_table(cutoff, params)
    phi = build_window(1, cutoff).phi.astype(np.float64)
    d = np.arange(1, cutoff + 1, dtype=np.float64)
    lhs = float(np.sum(gam[1:] / phi * d ** (-s)))
    rhs = math.prod(zeta(s + 1.0 - e) for e in params.shifts)
    gap = rhs - lhs
    bound = rankin_tail_bound(cutoff, sigma, params.r)
    rounding = 1e-12 * max(1.0, rhs)
    return SeriesCheck(lhs, rhs, gap, bound, -rounding <= gap <= bound + rounding)


# ---------------------------------------------------------------------------
# local factors and sieve densities


def local_factor_P(v: int, s: float, params: DensityParams) -> float:
    """P_v(s) = prod_{p | v} prod_{i=1..r} (1 - p^{eps_i - s - 1})."""
    out = 1.0
    for p in prime_divisors(v) if v > 1 else []:
        out *= float(np.prod(1.0 - float(p) ** (params.shifts - s - 1.0)))
    return out


def g_at_prime(p, eps_index: int, params: DensityParams):
    """Closed form g_eps(p) = 1 - (p - 2)/(p - 1) * P_p(eps)."""
    p = np.asarray(p, dtype=np.float64)
    eps = params.eps[eps_index]
    P = np.prod(1.0 - p[..., None] ** (params.shifts - eps - 1.0), axis=-1)
    return 1.0 - (p - 2.0) / (p - 1.0) * P


class GDensity(NamedTuple):
    closed: float | None
    summed: float
    tail_bound: float
    converged: bool


def _local_terms(p: int, eps: float, params: DensityParams, amax: int) -> np.ndarray:
    # gamma(p^a) p^{-a(eps+1)} for a = 0..amax, built from ratios p^{eps_j - eps - 1}
    ratios = float(p) ** (params.shifts - eps - 1.0)
    H = _homogeneous(ratios[None, :], amax)[0]
    terms = (1.0 - 1.0 / p) * H
    terms[0] = 1.0
    return terms


def sieve_density_g(q: int, eps_index: int, params: DensityParams, trunc: int) -> GDensity:
    """g_eps(q) by its closed form and by direct summation over c | q^inf, c <= trunc.

    The direct sum is P_q(eps)/phi(q) * sum_c gamma(c) (c, q) c^{-eps-1}.
    ``tail_bound`` bounds the discarded c > trunc (Rankin) and is infinite
    when the series diverges, i.e. when eps_r - eps >= 1.
    """
    eps = float(params.eps[eps_index])
    fac = factorize(q) if q > 1 else {}
    squarefree = all(e == 1 for e in fac.values())
    closed = None
    if squarefree:
        closed = float(np.prod([g_at_prime(p, eps_index, params) for p in fac])) if fac else 1.0
    prefactor = local_factor_P(q, eps, params) / euler_phi(q)

    # enumerate c = prod p^a over q's primes with c <= trunc
    cs = [(1, 1.0)]  # (c, gamma(c) c^{-eps-1})
    for p in fac:
        amax = int(math.floor(math.log(trunc) / math.log(p) + 1e-12)) if trunc >= p else 0
        terms = _local_terms(p, eps, params, amax)
        grown = []
        for c, t in cs:
            pa = 1
            for a in range(amax + 1):
                if c * pa > trunc:
                    break
                grown.append((c * pa, t * terms[a]))
                pa *= p
        cs = grown
    total = math.fsum(t * math.gcd(c, q) for c, t in cs)
    summed = prefactor * total

    slack = 1.0 + eps - float(np.max(params.shifts))
    if not fac:
        return GDensity(closed, summed, 0.0, True)
    if slack <= 0:
        return GDensity(closed, summed, math.inf, False)
    # sum_{c > T} |term| <= T^{-delta} prod_p sum_a |term_p(a)| p^{a delta}
    best = math.inf
    for delta in slack * np.linspace(0.05, 0.95, 19):
        local = 1.0
        for p in fac:
            inv = float(np.prod(1.0 / (1.0 - float(p) ** (params.shifts - eps - 1.0 + delta))))
            local *= 1.0 + (p - 1.0) * (inv - 1.0)
        best = min(best, math.exp(-delta * math.log(trunc)) * local)
    return GDensity(closed, summed, abs(prefactor) * q * best, True)


def sieve_density_g_auto(
    q: int, eps_index: int, params: DensityParams, target: float = 1e-12, max_log2: int = 1 << 14
) -> GDensity:
    """:func:`sieve_density_g` with the truncation squared until the tail bound drops below ``target``.

    Divergent series come back at once with ``converged=False``. Gives up
    (returning the last, still converged, attempt) once log2(trunc) exceeds ``max_log2``.
    """
    trunc = max(2, q) ** 8
    while True:
        g = sieve_density_g(q, eps_index, params, trunc)
        if not g.converged or g.tail_bound <= target or trunc.bit_length() > max_log2:
            return g
        trunc *= trunc


def g_expansion_constant(eps_index: int, params: DensityParams, p_max: int) -> float:
    """max over primes p <= p_max of p^2 |g_eps(p) - 1/p - sum_j p^{eps_j - eps - 1}|."""
    ps = np.concatenate(list(iter_prime_chunks(p_max))).astype(np.float64)
    eps = params.eps[eps_index]
    approx = 1.0 / ps + np.sum(ps[:, None] ** (params.shifts[None, :] - eps - 1.0), axis=1)
    return float(np.max(ps**2 * np.abs(g_at_prime(ps, eps_index, params) - approx)))


def G_v(eps_index: int, v: int, w: SieveWeights, params: DensityParams) -> float:
    """sum_{q < y, (q, v) = 1} xi_q g_eps(q) over the support of w."""
    support = w.support
    g = np.ones(support.size)
    keep = np.ones(support.size, dtype=bool)
    for p in w.primes:
        divisible = support % p == 0
        if v % p == 0:
            keep &= ~divisible
        g[divisible] *= float(g_at_prime(p, eps_index, params))
    return math.fsum((w.xi[keep] * g[keep]).tolist())


# ---------------------------------------------------------------------------
# residues


def residue_R(i: int, params: DensityParams) -> float:
    """Residue of D(s)/s at s = eps_i, D(s) = prod_{j=1..r} zeta(s + 1 - eps_j).

    R(0) = D(0); for i >= 1, R(i) = (1/eps_i) prod_{j >= 1, j != i} zeta(1 + eps_i - eps_j).
    """
    if not 0 <= i <= params.r:
        raise ValueError(f"index {i} outside 0..{params.r}")
    if not params.distinct:
        raise ValueError("residues need pairwise distinct nonzero eps")
    e = params.eps
    kappa = 1.0 if i == 0 else 1.0 / e[i]
    return kappa * math.prod(zeta(1.0 + e[i] - e[j]) for j in range(1, params.r + 1) if j != i)


def perron_main_term(X: float, v: int, params: DensityParams) -> float:
    """sum_i R(i) P_v(eps_i) X^{eps_i}: the polar part of sum_{d<X,(d,v)=1} gamma(d)/phi(d)."""
    return math.fsum(
        residue_R(i, params) * local_factor_P(v, params.eps[i], params) * X ** params.eps[i]
        for i in range(params.r + 1)
    )


def coprime_partial_sum(X: int, v: int, params: DensityParams, gamma=None, phi=None) -> float:
    """sum_{d < X, (d, v) = 1} gamma(d)/phi(d)."""
    gam = gamma_table(X, params) if gamma is None else gamma
    ph = build_window(1, X).seq("phi") if phi is None else phi
    d = np.arange(1, X)
    mask = np.gcd(d, v) == 1
    return math.fsum((gam[1:X][mask] / ph[1:X][mask]).tolist())


def check_L_identity(q: int, n: int, h: int, X: int, params: DensityParams) -> tuple[float, float]:
    """Both sides of the c | q^inf rearrangement of sum_{d<X,(d,hn)=1} gamma(d)/phi([d, q]).

    Requires gcd(q, hn) = 1.
    """
    if math.gcd(q, h * n) != 1:
        raise ValueError("rearrangement needs gcd(q, hn) = 1")
    gam = gamma_table(X, params)
    phi = build_window(1, X).seq("phi")
    d = np.arange(1, X)
    lcm = d * q // np.gcd(d, q)
    mask = np.gcd(d, h * n) == 1
    lhs = math.fsum((gam[1:X][mask] / np.array([euler_phi(int(m)) for m in lcm[mask]])).tolist())

    qp = prime_divisors(q) if q > 1 else []
    cs = [1]
    for p in qp:
        cs = [c * p**a for c in cs for a in range(int(math.log(X) / math.log(p)) + 2) if c * p**a < X]
    rhs = 0.0
    terms = []
    for c in cs:
        inner_mask = mask & (np.gcd(d, q) == 1) & (d * c < X)
        inner = math.fsum((gam[1:X][inner_mask] / phi[1:X][inner_mask]).tolist())
        terms.append(gamma_coeff(c, params) * math.gcd(c, q) / c * inner)
    rhs = math.fsum(terms) / euler_phi(q)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Hardy-Littlewood constants


@dataclass(frozen=True)
class SingularConstants:
    B: float
    C: dict
    cutoff: int
    tail_bound: float


def C_of_h(h: int) -> Fraction:
    """prod_{p | h, p > 2} (1 - 1/(p - 1))^{-1}, exact."""
    if h == 0 or h % 2:
        raise ValueError(f"h must be even and nonzero, got {h}")
    out = Fraction(1)
    for p in prime_divisors(abs(h)):
        if p > 2:
            out *= Fraction(p - 1, p - 2)
    return out


@lru_cache(maxsize=4)
def twin_constant_B(prime_cutoff: int = 10**8) -> tuple[float, float]:
    """B = 2 prod_{p>2} (1 - 1/(p-1)) (1 - 1/p)^{-1} and an error bound.

    The product runs over p <= prime_cutoff; the remaining factors, whose logs
    are about -1/p^2, are estimated by -E1(log X) = -int_X^inf dt/(t^2 log t).
    """
    partials = []
    for chunk in iter_prime_chunks(prime_cutoff):
        p = chunk[chunk > 2].astype(np.float64)
        if p.size:
            partials.append(float(np.sum(np.log1p(-1.0 / (p - 1.0)) - np.log1p(-1.0 / p))))
    X = float(prime_cutoff)
    tail = -float(exp1(math.log(X)))
    # pi(t) < 1.25506 t / log t bounds the true tail by about 1.26 E1(log X)
    bound = 2.0 * math.exp(math.fsum(partials)) * 1.3 * float(exp1(math.log(X)))
    return 2.0 * math.exp(math.fsum(partials) + tail), bound


def twin_constants(h: int, prime_cutoff: int = 10**8) -> SingularConstants:
    if h == 0 or h % 2:
        raise ValueError(f"h must be even and nonzero, got {h}")
    B, bound = twin_constant_B(prime_cutoff)
    return SingularConstants(B=B, C={h: float(C_of_h(h))}, cutoff=prime_cutoff, tail_bound=bound)
