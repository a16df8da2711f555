"""
tests/test_arith.py

篩・ファレイ数・厳密総和のテスト
"""

from fractions import Fraction
from math import gcd, log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlab.arith import (E_GAMMA, RealBracket, build_sieve, divisor_sum_identity_holds, exact_sum, farey_count,
                        farey_min_gap, farey_sequence, harmonic_number, log_factorial_bracket, loglog,
                        loglog_bracket, niederreiter_threshold, phi_extremal_witness, totient_ratio_sum,
                        totient_sum)
from dlab.errors import InputError, ResourceError

SIEVE = build_sieve(4096)


def brute_totient(n: int) -> int:
    return sum(1 for a in range(1, n + 1) if gcd(a, n) == 1)


@pytest.mark.parametrize("n, phi", [(1, 1), (2, 1), (6, 2), (7, 6), (12, 4), (30, 8), (120, 32), (4096, 2048)])
def test_totient_known_values(n, phi):
    assert SIEVE.totient(n) == phi


@pytest.mark.parametrize("n, mu", [(1, 1), (2, -1), (4, 0), (6, 1), (12, 0), (30, -1)])
def test_mobius_known_values(n, mu):
    assert SIEVE.mobius(n) == mu


@given(st.integers(min_value=1, max_value=4096))
def test_totient_matches_gcd_count(n):
    assert SIEVE.totient(n) == brute_totient(n)


@given(st.integers(min_value=1, max_value=4096))
def test_factorize_reconstructs(n):
    product = 1
    for p, e in SIEVE.factorize(n).items():
        assert SIEVE.smallest_prime_factor[p] == p
        product *= p ** e
    assert product == n


def brute_mobius(n: int) -> int:
    sign, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            sign = -sign
        p += 1
    return -sign if n > 1 else sign


@pytest.mark.parametrize("limit", [1, 2, 3, 4, 5, 8, 9, 25, 97, 1000])
def test_linear_sieve_small_limits(limit):
    table = build_sieve(limit)
    for n in range(1, limit + 1):
        assert table.phi[n] == brute_totient(n)
        assert table.mu[n] == brute_mobius(n)
    for n in range(2, limit + 1):
        p = int(table.smallest_prime_factor[n])
        assert n % p == 0
        assert all(n % d for d in range(2, p))
    assert list(table.primes) == [n for n in range(2, limit + 1) if table.smallest_prime_factor[n] == n]


def test_totient_beyond_table():
    small = build_sieve(100)
    # 6054 = 2·3·1009、1009 は表の外の素数
    assert small.totient(6054) == 2016
    assert small.totient(1000003) == 1000002


def test_build_sieve_rejects_bad_limits():
    with pytest.raises(InputError):
        build_sieve(0)
    with pytest.raises(ResourceError):
        build_sieve(200, max_limit=100)


def test_sieve_tables_are_read_only():
    with pytest.raises(ValueError):
        SIEVE.phi[1] = 7


@settings(max_examples=200)
@given(st.integers(min_value=1, max_value=300),
       st.fractions(min_value=0, max_value=1, max_denominator=12),
       st.fractions(min_value=0, max_value=1, max_denominator=12))
def test_farey_count_matches_enumeration(n, a, b):
    lo, hi = min(a, b), max(a, b)
    expected = sum(1 for k in range(1, n + 1) if gcd(k, n) == 1 and lo <= Fraction(k, n) <= hi)
    assert farey_count(n, (lo, hi), SIEVE) == expected


def test_farey_count_full_interval_is_totient():
    for n in (1, 10, 97, 360):
        assert farey_count(n, (0, 1), SIEVE) == SIEVE.totient(n)


def test_farey_count_rejects_interval_outside_unit():
    with pytest.raises(InputError):
        farey_count(5, (Fraction(1, 2), Fraction(3, 2)), SIEVE)


def test_niederreiter_threshold_bound_holds_after_n0():
    report = niederreiter_threshold((Fraction(1, 3), Fraction(2, 3)), 600, sieve=SIEVE)
    assert report.n0 <= 100
    assert all(n < report.n0 for n in report.failures)
    for n in range(report.n0, 601):
        assert farey_count(n, (Fraction(1, 3), Fraction(2, 3)), SIEVE) >= Fraction(1, 2) * SIEVE.totient(n) / 3


@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(1, 60)), max_size=40))
def test_exact_sum_matches_fraction_sum(terms):
    expected = sum((Fraction(a, b) for a, b in terms), Fraction(0))
    assert exact_sum([a for a, _ in terms], [b for _, b in terms]) == expected
    if terms:
        numerators = np.array([a for a, _ in terms], dtype=np.int64)
        denominators = np.array([b for _, b in terms], dtype=np.int64)
        assert exact_sum(numerators, denominators) == expected


def test_totient_sum_small():
    assert totient_sum(10, SIEVE) == 32


def test_totient_ratio_sum_matches_direct_sum():
    direct = sum((Fraction(n, SIEVE.totient(n)) for n in range(1, 301)), Fraction(0))
    assert totient_ratio_sum(300, SIEVE) == direct


def test_divisor_sum_identity():
    assert divisor_sum_identity_holds(2000, SIEVE)


def test_extremal_witnesses_start_with_primorials():
    witnesses = phi_extremal_witness(4096, SIEVE)
    assert [w.n for w in witnesses[:3]] == [30, 210, 2310]
    assert all(w.is_primorial for w in witnesses[:3])
    for w in witnesses:
        assert w.phi < w.n / (E_GAMMA * log(log(w.n)))


def test_extremal_witness_below_loglog_floor():
    assert phi_extremal_witness(15, SIEVE) == []


def test_farey_sequence_order_five():
    terms = [Fraction(a, b) for a, b in farey_sequence(5)]
    assert len(terms) == 11
    assert terms == sorted(terms)
    assert terms[1] == Fraction(1, 5) and terms[-1] == 1


@given(st.integers(min_value=2, max_value=80))
def test_farey_min_gap(Q):
    gap = farey_min_gap(Q)
    assert gap == Fraction(1, Q * (Q - 1))
    assert gap >= Fraction(1, Q * Q)


def test_harmonic_number():
    assert harmonic_number(0) == 0
    assert harmonic_number(4) == Fraction(25, 12)


def test_loglog_clamps_small_arguments():
    assert loglog(3) == loglog(16)
    assert float(loglog_bracket(16).mid) == pytest.approx(log(log(16)), rel=1e-14)


def test_log_factorial_bracket():
    bracket = log_factorial_bracket(5)
    assert bracket.lower <= bracket.upper
    assert float(bracket.mid) == pytest.approx(log(120), rel=1e-14)
    assert log_factorial_bracket(1).width == 0


def test_real_bracket_comparisons():
    low = RealBracket(Fraction(1), Fraction(2))
    high = RealBracket(Fraction(3), Fraction(4))
    assert high.certainly_ge(low)
    assert not low.certainly_ge(high)
    assert not low.possibly_ge(high)
    same = RealBracket(Fraction(1), Fraction(1))
    assert same.possibly_ge(same)
    with pytest.raises(InputError):
        RealBracket(Fraction(0), Fraction(1)).reciprocal()
