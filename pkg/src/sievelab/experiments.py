"""Desk-scale evaluation of the twin-prime sums and their sieve decompositions.

Pair sums run over 0 < m, n <= x with m - n = h and gcd(mn, h) = 1 unless
stated otherwise. Every sum is split into fixed blocks, each block summed
pairwise by numpy, and the block totals combined with ``math.fsum``; the
block layout does not depend on the thread count, so results are identical
for any number of threads.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .arith import (
    ArithWindow,
    coprime_mask,
    dirichlet_convolve,
    euler_phi,
    factorize,
    prime_divisors,
    primes_up_to,
    psi,
    squarefree_divisors,
    von_mangoldt_table,
)
from .characters import RealCharacter
from .decomp import DecompSet, build_decomp
from .densities import C_of_h, DensityParams, gamma_table, twin_constant_B
from .report import ExperimentReport
from .weights import SieveWeights, build_weights, theta_table

log = logging.getLogger(__name__)

BLOCK = 1 << 20
PRESETS = ("desk", "paper")


def _map(func, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(func, items))
    return [func(i) for i in items]


def _blocks(lo: int, hi: int):
    return [(a, min(a + BLOCK, hi + 1)) for a in range(lo, hi + 1, BLOCK)]


def _check_h(h: int) -> None:
    if h == 0 or h % 2:
        raise ValueError(f"h must be even and nonzero, got {h}")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    h: int
    x: int
    chi: RealCharacter
    y: float
    z: float
    weights: SieveWeights
    density: DensityParams
    preset: str

    def echo(self) -> dict:
        return {
            "preset": self.preset,
            "h": self.h,
            "x": self.x,
            "disc": self.chi.disc,
            "y": self.y,
            "z": self.z,
            "construction": self.weights.construction,
            "r": self.density.r,
        }


def preset_levels(x: int, preset: str) -> tuple[float, float]:
    """(y, z) for a preset.

    ``paper``: z^72 = y = x^(1/20). ``desk``: y = floor(x^(1/3)), z = floor(sqrt(y)).
    """
    if preset == "paper":
        y = x ** (1 / 20)
        return y, y ** (1 / 72)
    if preset == "desk":
        y = math.floor(x ** (1 / 3) + 1e-9)
        return float(y), float(max(2, math.isqrt(y)))
    raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")


def make_config(
    h: int,
    x: int,
    disc: int = 5,
    preset: str = "desk",
    y: float | None = None,
    z: float | None = None,
    construction: str = "brun",
    r: int = 17,
) -> ExperimentConfig:
    _check_h(h)
    if not 0 < h <= x:
        raise ValueError(f"need 0 < h <= x, got h={h}, x={x}")
    chi = RealCharacter(disc)
    py, pz = preset_levels(x, preset)
    y = py if y is None else float(y)
    z = pz if z is None else float(z)
    if preset == "paper":
        if z < 2:
            raise ValueError(
                f"paper preset degenerates at x={x}: z = x^(1/1440) = {z:.4f} < 2 (needs x >= 2^1440)"
            )
        if chi.modulus**4 > z:
            raise ValueError(f"paper preset needs D^4 <= z, got D={chi.modulus}, z={z:.4g}")
        if y > x ** (1 / 9):
            raise ValueError("paper preset needs y <= x^(1/9)")
    weights = build_weights(z, y, excluded=prime_divisors(h), parity="upper", construction=construction)
    return ExperimentConfig(h, x, chi, y, z, weights, DensityParams(z=z, r=r), preset)


# ---------------------------------------------------------------------------
# building blocks


def _pair_range(shift: int, x: int):
    """n-range [lo, hi] with 0 < n, n + shift <= x."""
    lo = max(1, 1 - shift)
    hi = min(x, x - shift)
    return lo, hi


def pair_sum(fm: np.ndarray, fn: np.ndarray, shift: int, x: int, threads: int = 1) -> float:
    """sum over 0 < m, n <= x, m - n = shift of fm[m] * fn[n]."""
    lo, hi = _pair_range(shift, x)
    if hi < lo:
        return 0.0

    def block(bounds):
        a, b = bounds
        return float(np.sum(fm[a + shift : b + shift] * fn[a:b]))

    return math.fsum(_map(block, _blocks(lo, hi), threads))


def twin_sum_S(h: int, x: int, lam: np.ndarray | None = None, threads: int = 1) -> float:
    """sum_{n <= x} Lambda(n) Lambda(n + h)."""
    if x > 2**50:
        raise OverflowError("x exceeds 2^50")
    if x < 1:
        return 0.0
    if lam is None:
        lam = von_mangoldt_table(x + abs(h))
    elif lam.size < x + abs(h) + 1:
        raise ValueError(f"Lambda table covers [1, {lam.size - 1}], need [1, {x + abs(h)}]")

    def block(bounds):
        a, b = bounds
        return float(np.sum(lam[a:b] * lam[a + h : b + h]))

    return math.fsum(_map(block, _blocks(1, x), threads))


def twin_sum_profile(h: int, xs, lam: np.ndarray | None = None) -> list[float]:
    """S_h(x) at each x in ``xs`` (ascending) from one pass over the table."""
    xs = sorted(int(v) for v in xs)
    if lam is None:
        lam = von_mangoldt_table(xs[-1] + abs(h))
    out, parts, prev = [], [], 0
    for x in xs:
        parts += [float(np.sum(lam[a:b] * lam[a + h : b + h])) for a, b in _blocks(prev + 1, x)]
        out.append(math.fsum(parts))
        prev = x
    return out


def majorants(
    N: int,
    chi: RealCharacter,
    y: float,
    params: DensityParams,
    x_cut: float | None = None,
    decomp: DecompSet | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """a(n) = sum_{ab=n, b>=y} tau(a) lambda(b), b(m) = sum_{ab=m, b<y} tau(a) tau(b),
    c(m) = sum_{d | m, d < x_cut^(1/3)} gamma(d), with x_cut defaulting to N."""
    ds = decomp if decomp is not None else build_decomp(chi, N)
    tau = ds.window.seq("tau")[: N + 1]
    cut = int(math.ceil(y))
    lam_long = ds.lam[: N + 1].copy()
    lam_long[: min(cut, N + 1)] = 0
    a = dirichlet_convolve(tau, lam_long)
    b = np.zeros(N + 1, dtype=np.int64)
    d = 1
    while d < y and d <= N:
        b[d::d] += tau[d] * tau[1 : N // d + 1]
        d += 1
    X = (N if x_cut is None else x_cut) ** (1 / 3)
    dmax = math.ceil(X) - 1 if X == math.ceil(X) else math.floor(X)
    gam = gamma_table(max(dmax, 1), params)
    c = np.zeros(N + 1)
    for d in range(1, dmax + 1):
        c[d::d] += gam[d]
    return a, b, c


# ---------------------------------------------------------------------------
# experiment context


class ExperimentContext:
    """Lazily built tables for one configuration, reused across sums."""

    def __init__(self, cfg: ExperimentConfig, window: ArithWindow | None = None, threads: int = 1):
        self.cfg = cfg
        self.threads = threads
        self._window = window

    @cached_property
    def decomp(self) -> DecompSet:
        return build_decomp(self.cfg.chi, self.cfg.x, self._window).with_split(int(math.ceil(self.cfg.y)))

    @property
    def lam(self) -> np.ndarray:
        return self.decomp.von_mangoldt

    @cached_property
    def theta(self) -> np.ndarray:
        return theta_table(self.cfg.weights, self.cfg.x).astype(np.float64)

    @cached_property
    def coprime(self) -> np.ndarray:
        return coprime_mask(self.cfg.x, self.cfg.h).astype(np.float64)

    @cached_property
    def majorants(self):
        return majorants(self.cfg.x, self.cfg.chi, self.cfg.y, self.cfg.density, decomp=self.decomp)

    def weighted(self, f: np.ndarray) -> np.ndarray:
        return self.theta * self.coprime * f

    def with_shift(self, h: int) -> "ExperimentContext":
        """Same character, x, y, z and tables; weights and coprimality for shift h."""
        cfg = self.cfg
        w = build_weights(cfg.z, cfg.y, prime_divisors(h), cfg.weights.parity, cfg.weights.construction)
        other = ExperimentContext(
            ExperimentConfig(h, cfg.x, cfg.chi, cfg.y, cfg.z, w, cfg.density, cfg.preset), threads=self.threads
        )
        other.__dict__["decomp"] = self.decomp
        if set(prime_divisors(h)) & set(cfg.weights.primes) == set(prime_divisors(cfg.h)) & set(cfg.weights.primes):
            other.__dict__["theta"] = self.theta
        return other


def sieved_star_sum(ctx: ExperimentContext) -> float:
    """S*_h(x) = sum theta(m) theta(n) Lambda*(m) Lambda*(n)."""
    f = ctx.weighted(ctx.decomp.lambda_star)
    return pair_sum(f, f, ctx.cfg.h, ctx.cfg.x, ctx.threads)


def sieved_full_sum(ctx: ExperimentContext) -> float:
    """sum theta(m) theta(n) Lambda(m) Lambda(n)."""
    f = ctx.weighted(ctx.lam)
    return pair_sum(f, f, ctx.cfg.h, ctx.cfg.x, ctx.threads)


def restricted_twin_sum(ctx: ExperimentContext) -> float:
    """sum Lambda(m) Lambda(n) over the pair range with gcd(mn, h) = 1, no sieve factors."""
    f = ctx.coprime * ctx.lam
    return pair_sum(f, f, ctx.cfg.h, ctx.cfg.x, ctx.threads)


def tail_sum_T(ctx: ExperimentContext, shift: int | None = None) -> float:
    """T_shift(x) = sum_{m-n=shift} theta(m) theta(n) (Lambda + Lambda*)(m) Lambda_*(n).

    ``shift = -h`` gives the mirrored sum with the factors' roles swapped.
    """
    shift = ctx.cfg.h if shift is None else shift
    ds = ctx.decomp
    fm = ctx.weighted(ctx.lam + ds.lambda_star)
    fn = ctx.weighted(ds.lambda_sub)
    return pair_sum(fm, fn, shift, ctx.cfg.x, ctx.threads)


def V_sum(ctx: ExperimentContext) -> float:
    """V_h(x) = sum theta(m) theta(n) c(m) a(n)."""
    a, _, c = ctx.majorants
    return pair_sum(ctx.weighted(c), ctx.weighted(a.astype(np.float64)), ctx.cfg.h, ctx.cfg.x, ctx.threads)


def _congruence_terms(ctx: ExperimentContext) -> np.ndarray:
    # theta(n) a(n) [(n, h) = 1] on the segment max(0, -h) < n <= min(x, x - h)
    a, _, _ = ctx.majorants
    A = ctx.weighted(a.astype(np.float64))
    lo, hi = _pair_range(ctx.cfg.h, ctx.cfg.x)
    seg = np.zeros_like(A)
    seg[lo : hi + 1] = A[lo : hi + 1]
    return seg


def _gamma_cut(ctx: ExperimentContext):
    X = ctx.cfg.x ** (1 / 3)
    dmax = math.ceil(X) - 1 if X == math.ceil(X) else math.floor(X)
    return dmax, gamma_table(max(dmax, 1), ctx.cfg.density)


def V_congruence(ctx: ExperimentContext) -> float:
    """V_h(x) rearranged as sum_q xi_q sum_d gamma(d) sum_{n = -h mod [d,q]} theta(n) a(n)."""
    h = ctx.cfg.h
    A = _congruence_terms(ctx)
    dmax, gam = _gamma_cut(ctx)
    terms = []
    for q, xi in zip(ctx.cfg.weights.support.tolist(), ctx.cfg.weights.xi.tolist()):
        for d in range(1, dmax + 1):
            if math.gcd(d, h) != 1:
                continue
            l = d * q // math.gcd(d, q)
            start = (-h) % l or l
            terms.append(xi * gam[d] * float(np.sum(A[start::l])))
    return math.fsum(terms)


class _MultipleSums:
    """Cached sums S_e = sum_{e | n} A(n)."""

    def __init__(self, A: np.ndarray):
        self.A = A
        self.cache: dict[int, float] = {}

    def __call__(self, e: int) -> float:
        if e not in self.cache:
            self.cache[e] = float(np.sum(self.A[e::e])) if e < self.A.size else 0.0
        return self.cache[e]

    def coprime(self, primes) -> float:
        """sum over n coprime to the product of ``primes``."""
        return math.fsum(m * self(e) for e, m in squarefree_divisors(primes))


def M_main(ctx: ExperimentContext) -> float:
    """M_h(x) = sum_q xi_q sum_d gamma(d)/phi([d,q]) sum_{n<=x, (n,hdq)=1} theta(n) a(n)."""
    h = ctx.cfg.h
    a, _, _ = ctx.majorants
    A = ctx.theta * a.astype(np.float64)
    sums = _MultipleSums(A)
    dmax, gam = _gamma_cut(ctx)
    hp = set(prime_divisors(h))
    terms = []
    for q, xi in zip(ctx.cfg.weights.support.tolist(), ctx.cfg.weights.xi.tolist()):
        for d in range(1, dmax + 1):
            if math.gcd(d, h) != 1:
                continue
            l = d * q // math.gcd(d, q)
            primes = sorted(hp | set(factorize(l) if l > 1 else {}))
            terms.append(xi * gam[d] / euler_phi(l) * sums.coprime(primes))
    return math.fsum(terms)


def congruence_sum_A(
    h: int,
    x: int,
    u: int,
    v: int,
    chi: RealCharacter | None = None,
    lam_prime: np.ndarray | None = None,
) -> float:
    """A_h(x; u, v) = sum_{m - n = h, u | m, v | n} lambda'(m) lambda'(n), gcd(mn, h) = 1.

    Pass either the character or a precomputed lambda' table covering [1, x].
    """
    if u < 1 or v < 1:
        raise ValueError("u, v must be positive")
    if lam_prime is None:
        if chi is None:
            raise ValueError("need chi or lam_prime")
        lam_prime = build_decomp(chi, x).lam_prime
    cop = coprime_mask(x, h)
    lo, hi = _pair_range(h, x)
    if hi < lo:
        return 0.0
    n = np.arange(lo, hi + 1)
    m = n + h
    mask = (n % v == 0) & (m % u == 0) & cop[n] & cop[m]
    return math.fsum((lam_prime[m[mask]] * lam_prime[n[mask]]).tolist())


# ---------------------------------------------------------------------------
# equidistribution


class ModulusRemainder(NamedTuple):
    modulus: int
    class_sum: float
    expected: float
    remainder: float
    normalized: float


@dataclass
class EquidistributionScan:
    rows: list[ModulusRemainder]

    @property
    def max_normalized(self) -> float:
        return max((abs(r.normalized) for r in self.rows), default=0.0)

    @property
    def mean_normalized(self) -> float:
        return float(np.mean([abs(r.normalized) for r in self.rows])) if self.rows else 0.0


def class_remainder(A: np.ndarray, modulus: int, residue: int, h: int) -> float:
    """sum_{n = residue mod q} A(n) - (1/phi(q)) sum_{(n, q) = 1} A(n), A supported on (n, h) = 1."""
    residue %= modulus
    start = residue or modulus
    class_sum = float(np.sum(A[start::modulus]))
    sums = _MultipleSums(A)
    expected = sums.coprime(prime_divisors(modulus) if modulus > 1 else []) / euler_phi(modulus)
    return class_sum - expected


def scan_moduli(ctx: ExperimentContext, moduli_cap: int) -> list[int]:
    """Moduli [d, q] <= cap with q in the weight support and d below x^(1/3), (d, h) = 1."""
    h = ctx.cfg.h
    dmax, _ = _gamma_cut(ctx)
    out = set()
    for q in ctx.cfg.weights.support.tolist():
        for d in range(1, dmax + 1):
            if math.gcd(d, h) == 1:
                l = d * q // math.gcd(d, q)
                if l <= moduli_cap:
                    out.add(l)
    return sorted(out)


def equidistribution_scan(ctx: ExperimentContext, moduli_cap: int, moduli=None) -> EquidistributionScan:
    """Remainders of theta(n) a(n) in the class n = -h mod q' against the reduced-class average.

    Each remainder is normalized by its expected value, the reduced-class average.
    """
    h = ctx.cfg.h
    A = ctx.weighted(ctx.majorants[0].astype(np.float64))
    sums = _MultipleSums(A)
    rows = []
    for l in moduli if moduli is not None else scan_moduli(ctx, moduli_cap):
        if math.gcd(l, h) != 1:
            continue
        start = (-h) % l or l
        class_sum = float(np.sum(A[start::l]))
        expected = sums.coprime(prime_divisors(l) if l > 1 else []) / euler_phi(l)
        rem = class_sum - expected
        rows.append(ModulusRemainder(l, class_sum, expected, rem, rem / expected if expected else 0.0))
    return EquidistributionScan(rows)


def run_equidistribution(N: int, chi: RealCharacter, y: float, z: float, h: int, moduli_cap: int, r: int = 17):
    """Scan with weights of level y and range P(z) built for shift h on [1, N]."""
    cfg = make_config(h, N, chi.disc, y=y, z=z, r=r)
    return equidistribution_scan(ExperimentContext(cfg), moduli_cap)


# ---------------------------------------------------------------------------
# shift invariance and averaging


class ShiftProbe(NamedTuple):
    S_star_h: float
    S_star_hk: float
    gap: float
    normalizer: float
    normalized_gap: float


def shift_invariance_probe(ctx: ExperimentContext, k: int) -> ShiftProbe:
    """Compare S*_h(x) with S*_{hk}(x); the gap is scaled by x(log x)^6 (psi(k)-1) + x(log x)^-2."""
    h, x = ctx.cfg.h, ctx.cfg.x
    if math.gcd(h, k) != 1:
        raise ValueError(f"shift probe needs gcd(h, k) = 1, got h={h}, k={k}")
    if h * k > x:
        raise ValueError("need hk <= x")
    s_h = sieved_star_sum(ctx)
    s_hk = s_h if k == 1 else sieved_star_sum(ctx.with_shift(h * k))
    L = math.log(x)
    norm = x * L**6 * (psi(k) - 1.0) + x / L**2
    gap = s_h - s_hk
    return ShiftProbe(s_h, s_hk, gap, norm, gap / norm)


def shift_set(h: int, w: float, K: int) -> tuple[np.ndarray, list[int]]:
    """The k <= K coprime to hP(w), and the primes of hP(w)."""
    primes = sorted(set(prime_divisors(h)) | {int(p) for p in primes_up_to(math.ceil(w) - 1) if p < w})
    k = np.arange(1, K + 1)
    keep = np.ones(K, dtype=bool)
    for p in primes:
        keep &= k % p != 0
    return k[keep], primes


def shift_average(
    h: int,
    x: int,
    w: float,
    K: int,
    lam: np.ndarray | None = None,
    prime_cutoff: int = 10**8,
    threads: int = 1,
) -> ExperimentReport:
    """Average S_{hk}(x) over k <= K coprime to hP(w) and compare with BC(h)x."""
    _check_h(h)
    if w < 2:
        raise ValueError("w must be >= 2")
    if K < 0:
        raise ValueError("K must be >= 0")
    report = ExperimentReport(metadata={"experiment": "shift-average", "h": h, "x": x, "w": w, "K": K})
    ks, primes = shift_set(h, w, K)
    count = int(ks.size)
    incl_excl = sum(m * (K // e) for e, m in squarefree_divisors(primes, limit=K))
    product = K * math.prod(1 - 1 / p for p in primes)
    report.add("K_count", x, h, count, main_term=product)
    report.add("K_count_inclusion_exclusion", x, h, incl_excl, main_term=count)
    if count == 0:
        msg = f"shift set is empty for K={K}"
        report.warnings.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return report
    psis = [psi(int(k)) for k in ks]
    report.add("psi_sum", x, h, math.fsum(psis), main_term=count)
    report.add("psi_minus_one_sum", x, h, math.fsum(p - 1 for p in psis), main_term=K / w)

    top = x + h * int(ks[-1])
    if lam is None:
        lam = von_mangoldt_table(top)
    idx = np.flatnonzero(lam[1 : x + 1]) + 1
    vals = lam[idx]

    def one(k):
        return float(np.sum(vals * lam[idx + h * int(k)]))

    sums = _map(one, ks.tolist(), threads)
    avg = math.fsum(sums) / count
    B, _ = twin_constant_B(prime_cutoff)
    main = B * float(C_of_h(h)) * x
    report.add("shift_average", x, h, avg, main_term=main)
    report.add("S_h", x, h, twin_sum_S(h, x, lam), main_term=main)
    return report


def theorem_error_report(h: int, x: int, chi: RealCharacter, lam=None, prime_cutoff: int = 10**8) -> ExperimentReport:
    """E = (S_h(x) - BC(h)x)/x tabulated against L(1,chi) log x and 1/log x."""
    _check_h(h)
    report = ExperimentReport(metadata={"experiment": "theorem-error", "h": h, "x": x, "disc": chi.disc})
    B, _ = twin_constant_B(prime_cutoff)
    main = B * float(C_of_h(h)) * x
    S = twin_sum_S(h, x, lam)
    L = math.log(x)
    E = (S - main) / x
    report.add("S_h", x, h, S, main_term=main)
    report.add("E", x, h, E)
    report.add("budget_L1_logx", x, h, chi.L1 * L)
    report.add("budget_inv_logx", x, h, 1 / L)
    report.add("eta", x, h, chi.eta)
    return report


# ---------------------------------------------------------------------------
# partition of S_h


@dataclass
class PartitionCheck:
    S_h: float
    sieved: float
    S_star: float
    T_h: float
    T_minus_h: float
    identity_residual: float
    residual: float
    budget: float

    @property
    def empirical_constant(self) -> float:
        return abs(self.residual) / self.budget


def partition_check(ctx: ExperimentContext) -> PartitionCheck:
    """S_h against S*_h + T_h/2 + T_{-h}/2 with the (h + z)(log x)^2 budget."""
    h, x = ctx.cfg.h, ctx.cfg.x
    S = twin_sum_S(h, x, von_mangoldt_table(x + h))
    full = sieved_full_sum(ctx)
    star = sieved_star_sum(ctx)
    T = tail_sum_T(ctx, h)
    Tm = tail_sum_T(ctx, -h)
    parts = math.fsum([star, T / 2, Tm / 2])
    budget = (h + ctx.cfg.z) * math.log(x) ** 2
    return PartitionCheck(S, full, star, T, Tm, full - parts, S - parts, budget)


def majorant_violations(ctx: ExperimentContext) -> dict[str, int]:
    """Counts of n with |Lambda_*(n)| > a(n) log x or |Lambda*(n)| > b(n) log x."""
    a, b, _ = ctx.majorants
    L = math.log(ctx.cfg.x)
    ds = ctx.decomp
    return {
        "lambda_sub": int(np.sum(np.abs(ds.lambda_sub[1:]) > a[1:] * L + 1e-9)),
        "lambda_star": int(np.sum(np.abs(ds.lambda_star[1:]) > b[1:] * L + 1e-9)),
    }
