"""lambda = chi*1, lambda' = chi*log, nu = mu chi * mu and the inversion Lambda = lambda' * nu."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import _kernels
from .arith import ArithWindow, build_window, dirichlet_convolve, log_seq, ones_seq
from .characters import RealCharacter

TERM_TOL = 1e-9


@dataclass(frozen=True)
class DecompSet:
    chi: RealCharacter
    N: int
    window: ArithWindow
    lam: np.ndarray  # lambda = chi * 1, integer valued
    lam_prime: np.ndarray  # lambda' = chi * log
    nu: np.ndarray  # nu = mu chi * mu, integer valued
    y: int | None = None
    lambda_star: np.ndarray | None = None
    lambda_sub: np.ndarray | None = None

    @property
    def von_mangoldt(self) -> np.ndarray:
        return self.window.seq("lam")

    def with_split(self, y: int) -> "DecompSet":
        star, sub = split(self, y)
        return replace(self, y=y, lambda_star=star, lambda_sub=sub)


class Violation(NamedTuple):
    n: int
    quantity: str
    lhs: float
    rhs: float


def build_decomp(chi: RealCharacter, N: int, window: ArithWindow | None = None) -> DecompSet:
    """Compute lambda, lambda' and nu on [1, N] by divisor loops."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if window is None:
        window = build_window(1, N)
    elif window.lo != 1 or window.hi < N:
        raise ValueError("window must cover [1, N]")
    elif window.hi > N:
        window = ArithWindow(
            lo=1, hi=N, **{k: getattr(window, k)[:N] for k in ("spf", "lam", "mu", "tau", "phi")}
        )
    c = chi.values(N)
    mu = window.seq("mu").astype(np.int64)
    lam = dirichlet_convolve(c, ones_seq(N))
    lam_prime = dirichlet_convolve(c.astype(np.float64), log_seq(N))
    nu = dirichlet_convolve(mu * c, mu)
    for arr in (lam, lam_prime, nu):
        arr.flags.writeable = False
    return DecompSet(chi=chi, N=N, window=window, lam=lam, lam_prime=lam_prime, nu=nu)


def verify_inversion(ds: DecompSet) -> float:
    """max_n |Lambda(n) - (lambda' * nu)(n)| over n <= N."""
    rebuilt = dirichlet_convolve(ds.lam_prime, ds.nu.astype(np.float64))
    return float(np.max(np.abs(ds.von_mangoldt[1:] - rebuilt[1:])))


def split(ds: DecompSet, y: int) -> tuple[np.ndarray, np.ndarray]:
    """Lambda^* (terms with b < y) and Lambda_* (terms with b >= y) of lambda' * nu."""
    if y < 1:
        raise ValueError("y must be >= 1")
    N = ds.N
    nu = ds.nu.astype(np.float64)
    star = np.zeros(N + 1)
    for b in range(1, min(int(y) - 1, N) + 1):
        if nu[b]:
            star[b :: b] += nu[b] * ds.lam_prime[1 : N // b + 1]
    long_nu = nu.copy()
    long_nu[: min(int(y), N + 1)] = 0.0
    sub = _kernels.convolve(ds.lam_prime, long_nu, np.zeros(N + 1))
    return star, sub


def verify_pointwise_bounds(ds: DecompSet, tol: float = TERM_TOL) -> list[Violation]:
    """Check 0 <= Lambda <= lambda' <= tau log and |nu| <= lambda <= tau pointwise."""
    n = np.arange(ds.N + 1)
    Lam = ds.von_mangoldt
    tau = ds.window.seq("tau")
    tau_log = tau * np.log(n.clip(1))
    checks = [
        ("0<=Lambda", np.zeros(ds.N + 1), Lam, 0.0),
        ("Lambda<=lambda'", Lam, ds.lam_prime, tol),
        ("lambda'<=tau*log", ds.lam_prime, tau_log, tol),
        ("|nu|<=lambda", np.abs(ds.nu), ds.lam, 0.0),
        ("lambda<=tau", ds.lam, tau, 0.0),
        ("0<=lambda", np.zeros(ds.N + 1), ds.lam, 0.0),
    ]
    out = []
    for name, lhs, rhs, slack in checks:
        bad = np.flatnonzero(lhs[1:] > rhs[1:] + slack) + 1
        out += [Violation(int(k), name, float(lhs[k]), float(rhs[k])) for k in bad]
    return out


def nu_prime_power_mismatches(ds: DecompSet) -> list[int]:
    """Prime powers n = p^k where nu differs from -1-chi(p), chi(p), 0 for k = 1, 2, >=3."""
    w = ds.window
    spf = w.seq("spf")
    Lam = ds.von_mangoldt
    bad = []
    for n in np.flatnonzero(Lam > 0):
        p = int(spf[n])
        k = round(np.log(n) / np.log(p))
        cp = ds.chi(p)
        want = -1 - cp if k == 1 else (cp if k == 2 else 0)
        if ds.nu[n] != want:
            bad.append(int(n))
    return bad
