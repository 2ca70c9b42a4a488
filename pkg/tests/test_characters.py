import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sievelab.characters import (
    RealCharacter,
    eta,
    fundamental_discriminants,
    is_fundamental,
    kronecker_symbol,
    l_one,
    l_one_with_bound,
    scan_exceptional,
)

DISCS = [5, 8, 12, 13, -3, -4, -7, -8, -163, 21, -84, 440]


def test_kronecker_examples():
    assert kronecker_symbol(5, 5) == 0
    assert kronecker_symbol(5, 4) == 1
    assert kronecker_symbol(5, 2) == -1
    # 2 is not a square mod 5: the residues are {1, 4}
    assert {x * x % 5 for x in range(1, 5)} == {1, 4}


def test_kronecker_n_zero():
    assert kronecker_symbol(1, 0) == 1 and kronecker_symbol(-1, 0) == 1
    assert kronecker_symbol(5, 0) == 0


@pytest.mark.parametrize("d", DISCS)
def test_kronecker_matches_residue_tables(d):
    for n in range(1, 400):
        assert kronecker_symbol(d, n) == oracles.quad_char(d, n), n


def test_is_fundamental():
    assert is_fundamental(5) and is_fundamental(8) and not is_fundamental(9)
    with pytest.raises(ValueError):
        is_fundamental(0)
    for d in range(-300, 301):
        if d:
            assert is_fundamental(d) == oracles.fundamental_brute(d), d


def test_character_rejects_bad_disc():
    for d in (9, 1, -1, 2, 12 * 4):
        with pytest.raises(ValueError):
            RealCharacter(d)


@pytest.mark.parametrize("d", DISCS)
def test_character_structure(d):
    chi = RealCharacter(d)
    D = chi.modulus
    v = chi.values(10**4 + D)
    assert np.array_equal(v[1 : 10**4 + 1], v[1 + D : 10**4 + D + 1])
    assert int(v[1 : D + 1].sum()) == 0
    n = np.arange(1, 2000)
    assert np.array_equal(v[1:2000] == 0, np.gcd(n, D) > 1)


@given(st.sampled_from(DISCS), st.integers(1, 10**5), st.integers(1, 10**5))
def test_complete_multiplicativity(d, m, n):
    chi = RealCharacter(d)
    assert chi(m * n) == chi(m) * chi(n)


def test_l_one_examples():
    assert l_one(RealCharacter(5)) == pytest.approx(2 * math.log((1 + math.sqrt(5)) / 2) / math.sqrt(5), abs=1e-13)
    assert l_one(RealCharacter(-4)) == pytest.approx(math.pi / 4, abs=1e-13)
    assert l_one(RealCharacter(-3)) == pytest.approx(math.pi / math.sqrt(27), abs=1e-13)


@pytest.mark.parametrize("d", [-23, -163, -84, 8, 12, 13, 229, 401, -499])
def test_l_one_class_number_oracle(d):
    value, bound = l_one_with_bound(RealCharacter(d))
    assert bound < 1e-12
    assert value == pytest.approx(oracles.class_number_L1(d), abs=1e-10)


def test_eta():
    assert eta(RealCharacter(5)) == pytest.approx(0.6927, abs=1e-4)
    assert eta(RealCharacter(-3)) == pytest.approx(0.6643, abs=1e-4)
    assert eta(RealCharacter(-4)) == pytest.approx(1.0888, abs=1e-4)
    assert RealCharacter(5).eta == eta(RealCharacter(5))


def test_scan_small_range():
    # fundamental d with 3 <= |d| <= 8: -3, -4, 5, -7, 8, -8
    assert sorted(fundamental_discriminants(3, 8)) == [-8, -7, -4, -3, 5, 8]
    top = scan_exceptional(3, 8, 3)
    assert [d for d, _, _ in top] == [-3, 5, -4]
    assert [round(e, 4) for _, _, e in top] == [0.6642, 0.6927, 1.0888]
    full = scan_exceptional(3, 8, 100)
    assert len(full) == 6
    etas = [e for _, _, e in full]
    assert etas == sorted(etas)
    assert dict((d, e) for d, _, e in full)[8] == pytest.approx(0.6232252401402307 * math.log(8))


def test_scan_empty_and_threads():
    assert scan_exceptional(9, 9, 5) == []
    assert scan_exceptional(3, 200, 10, threads=1) == scan_exceptional(3, 200, 10, threads=4)
    with pytest.raises(ValueError):
        scan_exceptional(3, 10, 0)
