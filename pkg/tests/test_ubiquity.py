"""
tests/test_ubiquity.py

ブロック統計・局所ユビキティ・打ち切り測度のテスト
"""

from fractions import Fraction

import pytest

from dlab.arith import shared_sieve
from dlab.blocks import MODE_BOUNDED, build_scheme, suggest_base
from dlab.errors import InputError
from dlab.intervals import MODE_CERTIFIED, UNIT_INTERVAL, RationalInterval
from dlab.model import ConstantProfile, FullProfile, NumeratorChoice, PhiProfile
from dlab.psi import ZeroPsi, parse_psi
from dlab.ubiquity import (REGIME_URN, STATISTIC_X, STATISTIC_Z, TAG_CHEBYSHEV_X, TAG_CHEBYSHEV_Z, count_X_t,
                           count_Z_t, chebyshev_experiment, dyadic_suite, grid_cells, kappa_report,
                           local_ubiquity_ratio, monte_carlo_membership, negative_correlation_check,
                           truncated_limsup_measure, union_bound, x_coupon_bounds, x_moments,
                           z_expectation_bound)

HALF_SQUARE = parse_psi("closed_form c=1/2 alpha=2")

# f ≡ 1 の底（N/2 ≤ Σ f ≤ N）
ONE = ConstantProfile(1)
BOUNDED_K = suggest_base(Fraction(1, 2), Fraction(1), MODE_BOUNDED)


def test_dyadic_suite():
    suite = dyadic_suite(1, 2)
    assert len(suite) == 6
    assert suite[0] == RationalInterval(Fraction(0), Fraction(1, 2))
    assert suite[-1] == RationalInterval(Fraction(3, 4), Fraction(1))
    with pytest.raises(InputError):
        dyadic_suite(3, 2)


def test_count_X_t_full_profile_is_totient_sum():
    scheme = build_scheme(FullProfile(), 2, (3, 4))
    P = NumeratorChoice(FullProfile(), 0)
    # φ(9) + … + φ(16) = 58
    assert count_X_t(P, UNIT_INTERVAL, scheme, 3) == 58
    mean, _ = x_moments(FullProfile(), UNIT_INTERVAL, scheme, 3)
    assert mean == 58


def test_x_moments_match_farey_counts():
    scheme = build_scheme(PhiProfile(), 2, (4, 5))
    I = RationalInterval(Fraction(1, 4), Fraction(1, 2))
    mean, variance = x_moments(PhiProfile(), I, scheme, 4)
    sieve = shared_sieve(32)
    assert mean > 0 and variance > 0
    assert mean <= sum(sieve.totient(n) for n in range(17, 33))


def test_grid_cells():
    cells = grid_cells(UNIT_INTERVAL, 8)
    assert (cells.l1, cells.l2, cells.count, cells.measure, cells.below_t0) == (-1, 7, 8, 1, False)
    assert grid_cells(RationalInterval(Fraction(0), Fraction(1, 16)), 8).below_t0
    third = grid_cells(RationalInterval(Fraction(1, 3), Fraction(2, 3)), 9)
    assert third.count == 3 and not third.below_t0


def test_count_Z_t_full_profile_fills_every_cell():
    scheme = build_scheme(FullProfile(), 2, (3, 5))
    P = NumeratorChoice(FullProfile(), 0)
    for t in scheme.ts:
        assert count_Z_t(P, UNIT_INTERVAL, scheme, t).value == scheme.N(t)
    short = count_Z_t(P, RationalInterval(Fraction(0), Fraction(1, 64)), scheme, 3)
    assert short.value is None and short.below_t0


def test_z_expectation_bound_below_cell_count():
    scheme = build_scheme(PhiProfile(), 2, (5, 5))
    cells = grid_cells(UNIT_INTERVAL, scheme.N(5))
    bound = z_expectation_bound(scheme, 5, cells)
    assert 0 < bound < cells.count


def test_local_ubiquity_ratio_bounds():
    scheme = build_scheme(PhiProfile(), 2, (4, 6))
    P = NumeratorChoice(PhiProfile(), 0)
    ratio = local_ubiquity_ratio(P, RationalInterval(Fraction(1, 4), Fraction(1, 2)), scheme, 5)
    assert ratio.exact
    assert 0 < ratio.value <= 1
    with pytest.raises(InputError):
        local_ubiquity_ratio(P, RationalInterval(Fraction(1, 2), Fraction(1, 2)), scheme, 5)


def test_kappa_report_is_reproducible_and_positive():
    scheme = build_scheme(PhiProfile(), 2, (4, 7))
    suite = dyadic_suite(1, 2)
    first = kappa_report(NumeratorChoice(PhiProfile(), 5), scheme, suite)
    second = kappa_report(NumeratorChoice(PhiProfile(), 5), scheme, suite)
    assert first.kappa_estimate == second.kappa_estimate
    assert len(first.records) == len(suite) * len(scheme.ts)
    assert first.passed and first.kappa_estimate >= Fraction(1, 100)
    assert set(first.per_t_minimum()) == set(scheme.ts)
    assert first.least_passing_t(suite[0]) == 4


def test_certified_ratios_enclose_exact_ratios():
    scheme = build_scheme(PhiProfile(), 2, (5, 6))
    suite = dyadic_suite(1, 3)
    exact = kappa_report(NumeratorChoice(PhiProfile(), 2), scheme, suite)
    certified = kappa_report(NumeratorChoice(PhiProfile(), 2), scheme, suite, MODE_CERTIFIED)
    for e, c in zip(exact.records, certified.records):
        assert (e.t, e.interval) == (c.t, c.interval)
        assert c.ratio.lower <= e.ratio.value <= c.ratio.upper


def test_x_coupon_bounds_full_profile():
    scheme = build_scheme(FullProfile(), 2, (3, 3))
    bounds = x_coupon_bounds(FullProfile(), UNIT_INTERVAL, scheme, 3)
    # 𝔼 = φ(9) + … + φ(16) = 58、F_3 = 9 + … + 16 = 100
    assert (bounds.expectation, bounds.F_t) == (58, 100)
    assert bounds.c1 == Fraction(29, 50)
    assert bounds.variance_limit == 25
    assert bounds.variance_holds
    assert bounds.expectation_holds(Fraction(1, 2))
    assert not bounds.expectation_holds(Fraction(3, 5))
    with pytest.raises(InputError):
        x_coupon_bounds(FullProfile(), RationalInterval(Fraction(1, 2), Fraction(1, 2)), scheme, 3)


@pytest.mark.parametrize("interval", dyadic_suite(1, 3))
def test_x_variance_is_at_most_quarter_block_sum(interval):
    scheme = build_scheme(PhiProfile(), 2, (5, 5))
    bounds = x_coupon_bounds(PhiProfile(), interval, scheme, 5)
    assert bounds.variance_holds
    assert bounds.variance <= Fraction(scheme.F(5), 4)
    assert bounds.expectation_holds(Fraction(1, 10))


def test_realized_and_urn_means_agree():
    scheme = build_scheme(PhiProfile(), 2, (5, 5))
    realized = chebyshev_experiment(STATISTIC_X, PhiProfile(), scheme, 5, trials=200, seed=4)
    urn = chebyshev_experiment(STATISTIC_X, PhiProfile(), scheme, 5, trials=200, seed=4, regime=REGIME_URN)
    assert realized.regime == "realized"
    assert realized.expectation == urn.expectation
    assert realized.agrees_with(urn, sigmas=5.0)
    assert realized.agrees_with(realized)


@pytest.mark.parametrize("regime", ["realized", REGIME_URN])
def test_chebyshev_x_is_thread_independent(regime):
    scheme = build_scheme(PhiProfile(), 2, (5, 5))
    single = chebyshev_experiment(STATISTIC_X, PhiProfile(), scheme, 5, trials=60, seed=9, regime=regime)
    pooled = chebyshev_experiment(STATISTIC_X, PhiProfile(), scheme, 5, trials=60, seed=9, regime=regime,
                                  threads=4)
    assert single.tag == TAG_CHEBYSHEV_X
    assert (single.failures, single.sample_mean) == (pooled.failures, pooled.sample_mean)
    assert single.passed
    assert single.failures == 0


def test_chebyshev_z():
    scheme = build_scheme(ONE, BOUNDED_K, (3, 3))
    assert BOUNDED_K == 4 and scheme.F(3) == 192
    result = chebyshev_experiment(STATISTIC_Z, ONE, scheme, 3, trials=40, seed=1)
    assert result.tag == TAG_CHEBYSHEV_Z
    # 192 個の分数で 64 セルをすべて埋めることはほぼない
    assert result.expectation <= result.sample_mean < scheme.N(3)
    assert result.passed
    with pytest.raises(InputError):
        chebyshev_experiment(STATISTIC_Z, ONE, scheme, 3, regime=REGIME_URN)
    with pytest.raises(InputError):
        chebyshev_experiment("W_t", ONE, scheme, 3)
    with pytest.raises(InputError):
        chebyshev_experiment(STATISTIC_X, ONE, scheme, 3, trials=0)


def test_negative_correlation_pairs():
    scheme = build_scheme(ONE, BOUNDED_K, (3, 3))
    pairs = negative_correlation_check(ONE, scheme, 3, trials=2000, seed=3)
    assert len(pairs) == 3
    assert not any(pair.vacuous for pair in pairs)
    assert all(0 < pair.p_k < 1 and 0 < pair.p_l < 1 for pair in pairs)
    assert all(pair.passed is not None for pair in pairs)
    assert all(pair.covariance <= 0.05 for pair in pairs)
    again = negative_correlation_check(ONE, scheme, 3, trials=2000, seed=3, threads=3)
    assert [p.covariance for p in pairs] == [p.covariance for p in again]


def test_saturated_cells_make_correlation_vacuous():
    # 全分子を選ぶと各セルは必ず被覆される
    scheme = build_scheme(FullProfile(), 2, (3, 3))
    pairs = negative_correlation_check(FullProfile(), scheme, 3, trials=50, seed=0)
    assert all(pair.vacuous for pair in pairs)
    assert all(pair.p_k == 1.0 and pair.covariance == 0.0 for pair in pairs)
    assert all(pair.passed is None for pair in pairs)


def test_truncated_measure_against_union_bound_and_monte_carlo():
    P = NumeratorChoice(FullProfile(), 0)
    measures = [truncated_limsup_measure(P, HALF_SQUARE, 0, N1) for N1 in (10, 40, 80)]
    assert all(m.exact for m in measures)
    assert measures[0].value <= measures[1].value <= measures[2].value <= 1
    assert measures[2].value <= union_bound(P, HALF_SQUARE, 0, 80)
    estimate = monte_carlo_membership(P, HALF_SQUARE, 0, 80, points=20_000, seed=0)
    assert estimate.agrees_with(measures[2].value, sigmas=5.0)
    certified = truncated_limsup_measure(P, HALF_SQUARE, 0, 80, MODE_CERTIFIED)
    assert certified.encloses(measures[2].value)


def test_truncated_measure_edge_cases():
    P = NumeratorChoice(FullProfile(), 0)
    assert truncated_limsup_measure(P, ZeroPsi(), 0, 50).value == 0
    sparse = parse_psi("sparse {4:1/16}")
    # 4 個の球 B(a/4, 1/16) のうち a = 4 は半分だけ [0,1] に入る
    assert truncated_limsup_measure(P, sparse, 0, 10**6).value == Fraction(7, 16)
    assert union_bound(P, sparse, 0, 10) == Fraction(1, 2)
    with pytest.raises(InputError):
        truncated_limsup_measure(P, HALF_SQUARE, 5, 5)
