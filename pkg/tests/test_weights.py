import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sievelab.arith import build_window
from sievelab.weights import (
    DegenerateWeightsWarning,
    brun_level,
    build_weights,
    monotonicity_sweep,
    theta,
    theta_monotonicity_probe,
    theta_table,
    unsifted_indicator,
    verify_theta_nonneg,
)

CASES = [
    (10, 10**4, "brun"),
    (30, 30.0**4, "brun"),
    (10, 10**4, "beta"),
    (30, 30.0**9, "beta"),
]


def test_brun_level():
    assert brun_level(10, 10**4, "upper") == 4
    assert brun_level(10, 10**4, "lower") == 3
    assert brun_level(10, 999, "upper") == 2


@pytest.mark.parametrize("z,y,construction", CASES)
@pytest.mark.parametrize("parity", ["upper", "lower"])
def test_support_invariants(z, y, construction, parity):
    w = build_weights(z, y, (), parity, construction)
    assert w.xi_of(1) == 1
    assert np.all(np.abs(w.xi) <= 1)
    P = math.prod(p for p in oracles.simple_primes(z - 1) if p < z)
    for q, x in w.weights.items():
        assert q < y and P % q == 0
        assert x == oracles.moebius(q)


def test_brun_example_values():
    w = build_weights(10, 10**4)
    assert w.xi_of(6) == 1 and w.xi_of(210) == 1 and w.xi_of(30) == -1
    assert len(w) == 16


def test_exclusions():
    w = build_weights(30, 30**4, excluded={2})
    assert all(q % 2 for q in w.weights)
    w3 = build_weights(30, 30**9, excluded={2, 3}, construction="beta")
    assert all(q % 2 and q % 3 for q in w3.weights)


def test_build_errors():
    with pytest.raises(ValueError):
        build_weights(10, 5)
    with pytest.raises(ValueError):
        build_weights(1.5, 10)
    with pytest.raises(ValueError):
        build_weights(10, 100, parity="middle")
    with pytest.raises(ValueError):
        build_weights(10, 100, construction="selberg")


def test_degenerate_warning():
    with pytest.warns(DegenerateWeightsWarning):
        w = build_weights(10, 15)
    assert w.weights == {1: 1}
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_weights(10, 15, parity="lower")


def test_theta_examples():
    w = build_weights(10, 10**4)
    assert theta(1, w) == 1
    for m in (11, 13 * 17, 121, 9991):
        assert theta(m, w) == 1
    for p in (2, 3, 5, 7):
        assert theta(p, w) == 0


@pytest.mark.parametrize("z,y,construction", CASES)
def test_theta_table_brute(z, y, construction):
    w = build_weights(z, y, construction=construction)
    t = theta_table(w, 3000)
    for m in range(1, 3001):
        assert t[m] == oracles.theta_brute(m, w.weights) == theta(m, w)


@pytest.mark.parametrize("z,y,construction", CASES)
def test_sandwich_and_tau_bound(z, y, construction):
    N = 10**5
    up = theta_table(build_weights(z, y, (), "upper", construction), N)
    lo = theta_table(build_weights(z, y, (), "lower", construction), N)
    ind = unsifted_indicator(build_weights(z, y), N)
    tau = build_window(1, N).seq("tau")
    assert np.all(lo[1:] <= ind[1:]) and np.all(ind[1:] <= up[1:])
    assert np.all(up[1:] >= 0)
    assert np.all(np.abs(up[1:]) <= tau[1:]) and np.all(np.abs(lo[1:]) <= tau[1:])
    assert up[1:].sum() >= ind[1:].sum()


def test_verify_theta():
    assert verify_theta_nonneg(build_weights(10, 10**4), 10**5) == []
    assert verify_theta_nonneg(build_weights(30, 30**9, construction="beta"), 10**5) == []
    assert verify_theta_nonneg(build_weights(10, 10**4), 1) == []
    with pytest.raises(ValueError):
        verify_theta_nonneg(build_weights(10, 10**4, parity="lower"), 10)


def test_pruned_truncation_breaks_positivity():
    # mu(q) on every q | P(30) with omega(q) <= 4 and q < 1000: pruning by size instead of
    # enforcing z^t <= y loses theta >= 0 (for instance at m = 1122 = 2 * 3 * 11 * 17).
    primes = [int(p) for p in oracles.simple_primes(29)]
    pruned = {}
    for k in range(5):
        for c in itertools.combinations(primes, k):
            if math.prod(c) < 1000:
                pruned[math.prod(c)] = (-1) ** k
    assert oracles.theta_brute(1122, pruned) < 0
    assert theta(1122, build_weights(30, 30**4)) >= 0


def test_monotonicity_probe_examples():
    w = build_weights(30, 30**4)
    r = theta_monotonicity_probe(97 * 3, 1, w)
    assert r.lhs == r.rhs and r.holds
    r = theta_monotonicity_probe(1, 7, w)
    assert (r.lhs, r.rhs, r.holds) == (0, 1, True)


def test_monotonicity_sweep_reports():
    w = build_weights(30, 30**4, construction="beta")
    sweep = monotonicity_sweep(w, 300, 40, keep=5)
    assert sweep.pairs == 12000
    assert 0 <= sweep.fraction < 0.05
    for a, b, lhs, rhs in sweep.examples:
        assert theta_monotonicity_probe(a, b, w) == (lhs, rhs, False)


@given(st.integers(1, 400), st.integers(1, 40))
def test_sweep_agrees_with_probe(a, b):
    w = build_weights(10, 10**4)
    sweep = monotonicity_sweep(w, a, b, keep=10**6)
    bad = {(x, y) for x, y, _, _ in sweep.examples}
    assert ((a, b) in bad) == (not theta_monotonicity_probe(a, b, w).holds)
