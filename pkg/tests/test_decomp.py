import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sievelab.arith import build_window, dirichlet_convolve
from sievelab.characters import RealCharacter
from sievelab.decomp import (
    build_decomp,
    nu_prime_power_mismatches,
    split,
    verify_inversion,
    verify_pointwise_bounds,
)

N = 20000


@pytest.fixture(scope="module", params=[5, -3, -4, 8, 12, -163])
def ds(request):
    return build_decomp(RealCharacter(request.param), N)


def test_unit_values(ds):
    assert (ds.lam[1], ds.lam_prime[1], ds.nu[1]) == (1, 0.0, 1)


def test_lambda_prime_at_primes(ds):
    primes = oracles.simple_primes(N)
    assert np.allclose(ds.lam_prime[primes], np.log(primes), atol=1e-12)


def test_against_direct_divisor_sums(ds):
    chi = ds.chi
    for n in list(range(1, 200)) + [997, 1024, 4096, 9240, 19999]:
        divs = oracles.divisors(n)
        assert ds.lam[n] == sum(chi(d) for d in divs)
        assert ds.lam_prime[n] == pytest.approx(math.fsum(chi(d) * math.log(n // d) for d in divs), abs=1e-9)
        assert ds.nu[n] == sum(oracles.moebius(d) * chi(d) * oracles.moebius(n // d) for d in divs)


def test_nu_at_small_powers_of_two():
    ds = build_decomp(RealCharacter(5), 100)
    assert ds.nu[2] == 0 and ds.nu[4] == -1


def test_inversion(ds):
    assert verify_inversion(ds) < 1e-9 * math.log(N)
    rebuilt = dirichlet_convolve(ds.lam_prime, ds.nu.astype(float))
    assert rebuilt[1] == 0.0 and ds.von_mangoldt[1] == 0.0


def test_pointwise_bounds(ds):
    assert verify_pointwise_bounds(ds) == []


def test_nu_prime_power_pattern(ds):
    assert nu_prime_power_mismatches(ds) == []


def test_lambda_prime_is_lambda_star_mangoldt(ds):
    other = dirichlet_convolve(ds.lam.astype(float), ds.von_mangoldt)
    assert np.max(np.abs(other - ds.lam_prime)) < 1e-9


@given(st.integers(1, 140), st.integers(1, 140))
def test_lambda_multiplicative(m, n):
    ds = build_decomp(RealCharacter(-7), 140 * 140)
    if math.gcd(m, n) == 1:
        assert ds.lam[m * n] == ds.lam[m] * ds.lam[n]


@pytest.mark.parametrize("y", [1, 2, 3, 10, 57, 1000, N, N + 5])
def test_split_partition(ds, y):
    star, sub = split(ds, y)
    assert np.max(np.abs(star + sub - ds.von_mangoldt)) < 1e-9
    if y == 1:
        assert not np.any(star)
    if y > N:
        assert not np.any(sub)
        assert np.max(np.abs(star - ds.von_mangoldt)) < 1e-9


def test_split_definition_small():
    ds = build_decomp(RealCharacter(5), 1000)
    star, sub = split(ds, 10)
    for n in (1, 12, 60, 360, 720, 997, 1000):
        want = math.fsum(ds.lam_prime[n // b] * ds.nu[b] for b in oracles.divisors(n) if b < 10)
        assert star[n] == pytest.approx(want, abs=1e-10)
    ws = ds.with_split(10)
    assert ws.y == 10 and np.array_equal(ws.lambda_star, star)
    assert np.max(np.abs(star + sub - ds.von_mangoldt)) < 1e-10
    with pytest.raises(ValueError):
        split(ds, 0)


def test_window_reuse():
    w = build_window(1, 3000)
    a = build_decomp(RealCharacter(8), 2000, w)
    b = build_decomp(RealCharacter(8), 2000)
    assert np.array_equal(a.nu, b.nu) and np.array_equal(a.lam_prime, b.lam_prime)
    with pytest.raises(ValueError):
        build_decomp(RealCharacter(8), 4000, w)
