"""Segmented sieving of arithmetic functions and exact Dirichlet convolution.

Arithmetic sequences are plain numpy arrays ``a`` with ``a[n] = f(n)`` for
``1 <= n <= N``; slot 0 is unused and kept at zero.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from . import _kernels

MAX_INT = 2**50
DEFAULT_SEGMENT = 2**22
CACHE_ENV = "SIEVELAB_CACHE"
_MAGIC = b"SLPT"
_VERSION = 1


class RangeError(ValueError):
    """Raised when an argument exceeds the supported integer range."""


# ---------------------------------------------------------------------------
# primes


def _simple_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def iter_prime_chunks(limit: int, segment: int = DEFAULT_SEGMENT) -> Iterator[np.ndarray]:
    """Yield the primes ``<= limit`` in increasing chunks, one per segment."""
    if limit > MAX_INT:
        raise RangeError(f"limit {limit} exceeds 2^50")
    if limit < 2:
        return
    base = base_primes(math.isqrt(limit))
    odd_base = base[1:]
    yield np.array([2], dtype=np.int64)
    lo = 3
    while lo <= limit:
        hi = min(lo + 2 * segment, limit + 1)  # exclusive, lo odd
        count = (hi - lo + 1) // 2
        mask = np.ones(count, dtype=bool)
        for p in odd_base:
            p = int(p)
            p2 = p * p
            if p2 >= hi:
                break
            start = max(p2, -(-lo // p) * p)
            if start % 2 == 0:
                start += p
            mask[(start - lo) // 2 :: p] = False
        chunk = lo + 2 * np.flatnonzero(mask).astype(np.int64)
        yield chunk[chunk <= limit]
        lo = hi if hi % 2 == 1 else hi + 1


def primes_up_to(limit: int) -> np.ndarray:
    """All primes ``<= limit`` as an int64 array."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    if limit <= 1 << 16:
        return _simple_sieve(limit)
    return np.concatenate(list(iter_prime_chunks(limit)))


def write_prime_table(path: str | os.PathLike, primes: np.ndarray) -> None:
    """Write primes in the SLPT binary format.

    Layout: magic ``SLPT``, one version byte, little-endian uint64 count,
    then ``count`` little-endian uint64 primes.
    """
    data = np.asarray(primes, dtype="<u8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes([_VERSION]))
        fh.write(struct.pack("<Q", data.size))
        fh.write(data.tobytes())


def read_prime_table(path: str | os.PathLike) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not an SLPT prime table")
    if raw[4] != _VERSION:
        raise ValueError(f"{path}: unsupported SLPT version {raw[4]}")
    (count,) = struct.unpack("<Q", raw[5:13])
    body = np.frombuffer(raw, dtype="<u8", count=count, offset=13)
    return body.astype(np.int64)


@lru_cache(maxsize=8)
def _base_primes_cached(limit: int) -> np.ndarray:
    cache_dir = os.environ.get(CACHE_ENV)
    if cache_dir:
        folder = Path(cache_dir)
        for f in sorted(folder.glob("base_primes_*.slpt")):
            try:
                bound = int(f.stem.rsplit("_", 1)[1])
            except ValueError:
                continue
            if bound >= limit:
                table = read_prime_table(f)
                return table[table <= limit]
    table = _simple_sieve(limit) if limit <= 1 << 24 else primes_up_to(limit)
    if cache_dir:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        write_prime_table(Path(cache_dir) / f"base_primes_{limit}.slpt", table)
    return table


def base_primes(limit: int) -> np.ndarray:
    """Primes up to ``limit``, read from / written to ``$SIEVELAB_CACHE`` when set."""
    out = _base_primes_cached(max(int(limit), 1))
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# windows


def _check_range(lo: int, hi: int) -> None:
    if lo < 1 or hi < lo:
        raise ValueError(f"need 1 <= lo <= hi, got lo={lo}, hi={hi}")
    if hi > MAX_INT:
        raise RangeError(f"hi={hi} exceeds the supported bound 2^50")


def _prime_power_parts(lo: int, hi: int, base: np.ndarray):
    """Yield ``(offsets, p, e)``: every n in [lo, hi] with p^e || n, e >= 1.

    ``offsets`` index into the window; ``p`` is an array aligned with them.
    Primes above sqrt(hi) are reported last, once per n.
    """
    size = hi - lo + 1
    rem = np.arange(lo, hi + 1, dtype=np.int64)
    for p in base:
        p = int(p)
        if p * p > hi:
            break
        start = -(-lo // p) * p
        if start > hi:
            continue
        idx = np.arange(start - lo, size, p, dtype=np.int64)
        cof = rem[idx] // p
        e = np.ones(idx.size, dtype=np.int64)
        live = np.flatnonzero(cof % p == 0)
        while live.size:
            cof[live] //= p
            e[live] += 1
            live = live[cof[live] % p == 0]
        rem[idx] = cof
        yield idx, np.full(idx.size, p, dtype=np.int64), e
    big = np.flatnonzero(rem > 1)
    yield big, rem[big], np.ones(big.size, dtype=np.int64)


@dataclass(frozen=True)
class ArithWindow:
    """Tables of Lambda, mu, tau, phi and smallest prime factor on [lo, hi].

    Arrays are indexed by ``n - lo``. Use :meth:`seq` to get a 1-based
    sequence when ``lo == 1``.
    """

    lo: int
    hi: int
    spf: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    tau: np.ndarray
    phi: np.ndarray

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def at(self, name: str, n: int):
        if not self.lo <= n <= self.hi:
            raise IndexError(f"{n} outside window [{self.lo}, {self.hi}]")
        return getattr(self, name)[n - self.lo]

    def seq(self, name: str) -> np.ndarray:
        """Return table ``name`` as a 1-based sequence (requires lo == 1)."""
        if self.lo != 1:
            raise ValueError("1-based sequences need a window starting at 1")
        arr = getattr(self, name)
        out = np.zeros(arr.size + 1, dtype=arr.dtype)
        out[1:] = arr
        return out

    def is_prime(self) -> np.ndarray:
        n = np.arange(self.lo, self.hi + 1)
        return (self.spf == n) & (n > 1)


def _sieve_segment(lo: int, hi: int, base: np.ndarray, segment_size: int) -> dict:
    if hi - lo + 1 > segment_size:
        raise ValueError(f"segment [{lo}, {hi}] longer than segment_size={segment_size}")
    size = hi - lo + 1
    spf = np.zeros(size, dtype=np.int64)
    mu = np.ones(size, dtype=np.int8)
    tau = np.ones(size, dtype=np.int64)
    phi = np.ones(size, dtype=np.int64)
    omega = np.zeros(size, dtype=np.int8)
    for idx, p, e in _prime_power_parts(lo, hi, base):
        unset = spf[idx] == 0
        spf[idx[unset]] = p[unset]
        mu[idx] = np.where(e > 1, 0, -mu[idx])
        tau[idx] *= e + 1
        phi[idx] *= (p - 1) * p ** (e - 1)
        omega[idx] += 1
    if lo == 1:
        spf[0] = 1
    lam = np.zeros(size, dtype=np.float64)
    pp = omega == 1
    lam[pp] = np.log(spf[pp].astype(np.float64))
    return dict(spf=spf, lam=lam, mu=mu, tau=tau, phi=phi)


def build_window(
    lo: int,
    hi: int,
    *,
    base: np.ndarray | None = None,
    segment_size: int = DEFAULT_SEGMENT,
) -> ArithWindow:
    """Sieve Lambda, mu, tau, phi and spf over [lo, hi].

    The interval is processed in pieces of at most ``segment_size``; the
    result does not depend on the segmentation. ``base`` must contain every
    prime up to sqrt(hi) when given.
    """
    lo, hi = int(lo), int(hi)
    _check_range(lo, hi)
    if base is None:
        base = base_primes(math.isqrt(hi))
    else:
        need = math.isqrt(hi)
        top = int(base[-1]) if base.size else 1
        if top < need and primes_up_to(need).size > base.size:
            raise ValueError("base prime table does not reach sqrt(hi)")
    parts = []
    start = lo
    while start <= hi:
        stop = min(hi, start + segment_size - 1)
        parts.append(_sieve_segment(start, stop, base, segment_size))
        start = stop + 1
    tables = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    for arr in tables.values():
        arr.flags.writeable = False
    return ArithWindow(lo=lo, hi=hi, **tables)


def von_mangoldt_table(N: int) -> np.ndarray:
    """Lambda(n) for 1 <= n <= N as a 1-based float64 sequence."""
    _check_range(1, N)
    lam = np.zeros(N + 1, dtype=np.float64)
    for chunk in iter_prime_chunks(N):
        lam[chunk] = np.log(chunk.astype(np.float64))
    for p in base_primes(math.isqrt(N)):
        p = int(p)
        pk = p * p
        while pk <= N:
            lam[pk] = math.log(p)
            pk *= p
    return lam


def multiplicative_table(
    lo: int,
    hi: int,
    at_prime_power: Callable[[np.ndarray, np.ndarray], np.ndarray],
    dtype=np.float64,
) -> np.ndarray:
    """Values of the multiplicative f with f(p^e) = at_prime_power(p, e) on [lo, hi].

    ``at_prime_power`` receives aligned int64 arrays of primes and exponents.
    """
    _check_range(lo, hi)
    base = base_primes(math.isqrt(hi))
    out = np.ones(hi - lo + 1, dtype=dtype)
    for idx, p, e in _prime_power_parts(lo, hi, base):
        if idx.size:
            out[idx] *= at_prime_power(p, e)
    return out


# ---------------------------------------------------------------------------
# scalar helpers


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division against the base prime table."""
    n = int(n)
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    if n > MAX_INT:
        raise RangeError(f"n={n} exceeds 2^50")
    out: dict[int, int] = {}
    for p in base_primes(math.isqrt(n)):
        p = int(p)
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def prime_divisors(n: int) -> list[int]:
    return sorted(factorize(n))


def radical(n: int) -> int:
    return math.prod(prime_divisors(n)) if n > 1 else 1


def euler_phi(n: int) -> int:
    out = 1
    for p, e in factorize(n).items():
        out *= (p - 1) * p ** (e - 1)
    return out


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def squarefree_divisors(primes, limit: int | None = None) -> list[tuple[int, int]]:
    """All ``(d, mu(d))`` with d a product of a subset of ``primes``, optionally d <= limit."""
    out = [(1, 1)]
    for p in primes:
        out += [(d * p, -m) for d, m in out if limit is None or d * p <= limit]
    return out


def tau_k(n: int, k: int) -> int:
    """Number of ordered factorizations of n into k positive factors."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.prod(math.comb(e + k - 1, k - 1) for e in factorize(n).values())


def tau_k_table(N: int, k: int) -> np.ndarray:
    """tau_k(n) for 1 <= n <= N as a 1-based int64 sequence."""
    binom = np.array([math.comb(e + k - 1, k - 1) for e in range(64)], dtype=np.int64)
    out = np.zeros(N + 1, dtype=np.int64)
    out[1:] = multiplicative_table(1, N, lambda p, e: binom[e], dtype=np.int64)
    return out


def psi(v: int) -> float:
    """v / phi(v)."""
    if v < 1:
        raise ValueError("psi needs v >= 1")
    return v / euler_phi(v)


# ---------------------------------------------------------------------------
# sequences


def dirichlet_convolve(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """(f * g)(n) = sum_{de=n} f(d) g(e) for 1 <= n <= N.

    Both inputs are 1-based sequences of the same length. Integer inputs give
    exact integer output.
    """
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError(f"convolution needs equal-length 1-d sequences, got {f.shape} and {g.shape}")
    out = _kernels.empty_like_result(f, g)
    if out.dtype == np.bool_ or out.dtype.kind not in "iuf":
        out = out.astype(np.float64)
    return _kernels.convolve(f, g, out)


def ones_seq(N: int, dtype=np.int64) -> np.ndarray:
    out = np.ones(N + 1, dtype=dtype)
    out[0] = 0
    return out


def log_seq(N: int) -> np.ndarray:
    out = np.log(np.arange(N + 1, dtype=np.float64).clip(1.0))
    out[0] = 0.0
    return out


def coprime_mask(N: int, h: int) -> np.ndarray:
    """Boolean 1-based mask of gcd(n, h) == 1 (slot 0 False)."""
    mask = np.ones(N + 1, dtype=bool)
    mask[0] = False
    for p in prime_divisors(abs(h)) if abs(h) > 1 else []:
        mask[p::p] = False
    return mask
