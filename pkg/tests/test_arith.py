import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sievelab import arith
from sievelab.arith import (
    RangeError,
    build_window,
    dirichlet_convolve,
    log_seq,
    ones_seq,
    psi,
    tau_k,
    tau_k_table,
    von_mangoldt_table,
)


@pytest.fixture(scope="module")
def win():
    return build_window(1, 3000)


def test_window_matches_trial_division(win):
    for n in range(1, 3001):
        assert win.at("lam", n) == pytest.approx(oracles.mangoldt(n), abs=1e-12)
        assert win.at("mu", n) == oracles.moebius(n)
        assert win.at("tau", n) == oracles.num_divisors(n)
    for n in range(1, 400):
        assert win.at("phi", n) == oracles.totient(n)


def test_window_small_examples(win):
    assert win.at("lam", 8) == pytest.approx(0.693147, abs=1e-6)
    assert (win.at("mu", 30), win.at("tau", 30), win.at("phi", 30)) == (-1, 8, 8)
    assert (win.at("lam", 1), win.at("mu", 1), win.at("tau", 1), win.at("phi", 1)) == (0, 1, 1, 1)


def test_prime_invariants(win):
    n = np.arange(1, 3001)
    primes = n[win.is_prime()]
    assert primes.tolist() == oracles.simple_primes(3000).tolist()
    idx = primes - 1
    assert np.all(win.spf[idx] == primes)
    assert np.allclose(win.lam[idx], np.log(primes))
    assert np.all(win.mu[idx] == -1)
    assert np.all(win.tau[idx] == 2)
    assert np.all(win.phi[idx] == primes - 1)


def test_lambda_and_mu_support(win):
    for n in range(2, 3001):
        f = oracles.factor(n)
        assert (win.at("lam", n) != 0) == (len(f) == 1)
        assert (win.at("mu", n) == 0) == any(e > 1 for e in f.values())


def test_phi_divisor_sum(win):
    phi = win.seq("phi")
    for n in range(1, 3001):
        assert sum(phi[d] for d in oracles.divisors(n)) == n


@pytest.mark.parametrize("segment", [1, 7, 64, 1000])
def test_segmentation_invariance(segment):
    whole = build_window(1, 5000)
    pieces = build_window(1, 5000, segment_size=segment)
    for name in ("spf", "lam", "mu", "tau", "phi"):
        assert np.array_equal(getattr(whole, name), getattr(pieces, name))


def test_offset_window_matches_full():
    base = arith.primes_up_to(math.isqrt(10**6 + 500))
    part = build_window(10**6, 10**6 + 500, base=base, segment_size=128)
    full = build_window(1, 10**6 + 500)
    for name in ("spf", "lam", "mu", "tau", "phi"):
        assert np.array_equal(getattr(part, name), getattr(full, name)[10**6 - 1 :])


def test_window_errors():
    with pytest.raises(ValueError):
        build_window(5, 4)
    with pytest.raises(RangeError):
        build_window(2**51, 2**51 + 1)
    with pytest.raises(ValueError):
        build_window(10**4, 10**4 + 10, base=np.array([2, 3]))


def test_von_mangoldt_table_agrees():
    w = build_window(1, 50000)
    assert np.array_equal(von_mangoldt_table(50000), w.seq("lam"))


def test_prime_table_roundtrip(tmp_path):
    primes = arith.primes_up_to(1000)
    path = tmp_path / "t.slpt"
    arith.write_prime_table(path, primes)
    raw = path.read_bytes()
    assert raw[:4] == b"SLPT" and raw[4] == 1
    assert int.from_bytes(raw[5:13], "little") == primes.size
    assert np.array_equal(arith.read_prime_table(path), primes)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        arith.read_prime_table(path)


def test_prime_cache_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(arith.CACHE_ENV, str(tmp_path))
    arith._base_primes_cached.cache_clear()
    try:
        first = arith.base_primes(5003)
        files = list(tmp_path.glob("*.slpt"))
        assert len(files) == 1
        arith._base_primes_cached.cache_clear()
        again = arith.base_primes(4000)
        assert np.array_equal(again, first[first <= 4000])
    finally:
        arith._base_primes_cached.cache_clear()


# ---------------------------------------------------------------------------
# convolution


def test_convolution_examples(win):
    N = 10**4
    assert np.array_equal(dirichlet_convolve(ones_seq(100), ones_seq(100))[1:], build_window(1, 100).tau)
    mu = build_window(1, N).seq("mu").astype(np.int64)
    unit = dirichlet_convolve(mu, ones_seq(N))
    assert unit[1] == 1 and not np.any(unit[2:])
    lam = dirichlet_convolve(mu.astype(float), log_seq(N))
    assert np.max(np.abs(lam - von_mangoldt_table(N))) < 1e-10


def test_convolution_shape_mismatch():
    with pytest.raises(ValueError):
        dirichlet_convolve(np.ones(5), np.ones(6))


seqs = st.integers(2, 300).flatmap(
    lambda n: st.tuples(*[st.lists(st.integers(-20, 20), min_size=n, max_size=n) for _ in range(3)])
)


@given(seqs)
def test_convolution_algebra_exact(fgh):
    f, g, h = (np.array([0] + v, dtype=np.int64) for v in fgh)
    assert np.array_equal(dirichlet_convolve(f, g), dirichlet_convolve(g, f))
    left = dirichlet_convolve(dirichlet_convolve(f, g), h)
    right = dirichlet_convolve(f, dirichlet_convolve(g, h))
    assert np.array_equal(left, right)


@given(st.integers(2, 1000), st.integers(0, 2**32 - 1))
def test_convolution_algebra_real(n, seed):
    rng = np.random.default_rng(seed)
    f, g, h = (np.concatenate([[0.0], rng.normal(size=n)]) for _ in range(3))
    fg = dirichlet_convolve(f, g)
    assert np.allclose(fg, dirichlet_convolve(g, f), rtol=1e-9, atol=1e-9)
    left = dirichlet_convolve(fg, h)
    right = dirichlet_convolve(f, dirichlet_convolve(g, h))
    assert np.allclose(left, right, rtol=1e-9, atol=1e-9 * np.max(np.abs(left)))


def test_convolution_brute_force():
    rng = np.random.default_rng(3)
    f = np.concatenate([[0], rng.integers(-5, 6, 200)])
    g = np.concatenate([[0], rng.integers(-5, 6, 200)])
    h = dirichlet_convolve(f, g)
    for n in range(1, 201):
        assert h[n] == sum(f[d] * g[n // d] for d in oracles.divisors(n))


def test_hyperbola_identity():
    N = 10**5
    tau = build_window(1, N).tau
    assert int(tau.sum()) == sum(N // d for d in range(1, N + 1))


# ---------------------------------------------------------------------------
# tau_k and psi


def test_tau_k_examples():
    assert tau_k(1, 5) == 1
    for p in (2, 3, 97):
        assert tau_k(p, 14) == 14
    assert tau_k(12, 16) == 2176 == oracles.tau_k_brute(12, 16)


@given(st.integers(1, 400), st.integers(1, 6))
def test_tau_k_brute(n, k):
    assert tau_k(n, k) == oracles.tau_k_brute(n, k)


def test_tau_k_table():
    t = tau_k_table(2000, 4)
    assert all(t[n] == tau_k(n, 4) for n in range(1, 2001))
    assert np.array_equal(tau_k_table(500, 2)[1:], build_window(1, 500).tau)


def test_tau_bound_by_small_tau14():
    # tau(a) <= 2^31 sum_{c | a, c <= a^(1/4)} tau_14(c) for all a <= 10^5
    N = 10**5
    tau = build_window(1, N).seq("tau")
    t14 = tau_k_table(N, 14)
    rhs = np.zeros(N + 1, dtype=np.int64)
    for c in range(1, math.isqrt(math.isqrt(N)) + 1):
        a = np.arange(c, N + 1, c)
        a = a[c**4 <= a]
        rhs[a] += t14[c]
    assert np.all(tau[1:] <= 2**31 * rhs[1:])


def test_psi():
    assert psi(1) == 1 and psi(2) == 2 and psi(6) == 3
    with pytest.raises(ValueError):
        psi(0)


def test_coprime_mask():
    m = arith.coprime_mask(100, 6)
    assert [n for n in range(1, 101) if m[n]] == [n for n in range(1, 101) if math.gcd(n, 6) == 1]
    assert not m[0]
