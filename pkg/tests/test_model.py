"""
tests/test_model.py

濃度プロファイル・部分集合サンプラー・超幾何モーメントのテスト
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dlab.errors import InputError
from dlab.model import (SAMPLING_METHODS, SELECTION, SHUFFLE, ConstantProfile, ExplicitProfile, FullProfile,
                        LinearProfile, NumeratorChoice, PhiProfile, UniformSubsetProfile, binomial_chebyshev_bound,
                        binomial_concentration_experiment, cardinality_histogram_check, chi_square_uniformity,
                        hypergeometric_bruteforce, hypergeometric_moments, inclusion_frequencies,
                        lemma_elementary_check, parse_profile, sample_subset, sample_uniform_subset)
from dlab.streams import DOMAIN_SUBSET, stream


def test_hypergeometric_reference_values():
    assert hypergeometric_moments(10, 5, 4) == (Fraction(2), Fraction(6, 5))
    assert hypergeometric_bruteforce(10, 5, 4) == (Fraction(2), Fraction(2, 3))


@given(st.integers(min_value=1, max_value=10).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(0, n))))
def test_hypergeometric_formula_matches_enumeration(params):
    n, m, D = params
    mean, bound = hypergeometric_moments(n, m, D)
    brute_mean, brute_variance = hypergeometric_bruteforce(n, m, D)
    assert brute_mean == mean
    assert 0 <= brute_variance <= bound


def test_hypergeometric_rejects_bad_parameters():
    with pytest.raises(InputError):
        hypergeometric_moments(5, 6, 1)
    with pytest.raises(InputError):
        hypergeometric_bruteforce(30, 2, 1)


@pytest.mark.parametrize("method", SAMPLING_METHODS)
@given(st.integers(min_value=1, max_value=200).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))),
       st.integers(min_value=0, max_value=2**32))
def test_sample_subset_shape(method, params, seed):
    n, m = params
    chosen = sample_subset(n, m, stream(seed, DOMAIN_SUBSET, n), method)
    assert len(chosen) == m
    assert len(np.unique(chosen)) == m
    assert np.all(np.diff(chosen) > 0)
    if m:
        assert chosen[0] >= 1 and chosen[-1] <= n


@pytest.mark.parametrize("method", SAMPLING_METHODS)
def test_sample_subset_is_deterministic(method):
    first = sample_subset(50, 20, stream(3, DOMAIN_SUBSET, 50), method)
    second = sample_subset(50, 20, stream(3, DOMAIN_SUBSET, 50), method)
    assert np.array_equal(first, second)


def test_sample_subset_rejects_bad_input():
    rng = stream(0, DOMAIN_SUBSET, 5)
    with pytest.raises(InputError):
        sample_subset(5, 6, rng)
    with pytest.raises(InputError):
        sample_subset(5, 2, rng, "reservoir")


def test_sample_uniform_subset():
    chosen = sample_uniform_subset(100, stream(1, DOMAIN_SUBSET, 100))
    assert np.all((chosen >= 1) & (chosen <= 100))
    with pytest.raises(InputError):
        sample_uniform_subset(0, stream(1, DOMAIN_SUBSET, 1))


def test_numerator_choice_is_reproducible_and_cached():
    P = NumeratorChoice(PhiProfile(), 42, SHUFFLE)
    Q = NumeratorChoice(PhiProfile(), 42, SHUFFLE)
    for n in (5, 17, 64):
        assert np.array_equal(P.subset(n), Q.subset(n))
        assert len(P.subset(n)) == PhiProfile().value(n)
    assert P.subset(17) is P.subset(17)
    P.clear()
    assert np.array_equal(P.subset(17), Q.subset(17))
    other = NumeratorChoice(PhiProfile(), 43, SHUFFLE)
    assert any(not np.array_equal(other.subset(n), Q.subset(n)) for n in range(20, 40))


def test_numerator_choice_block_order():
    P = NumeratorChoice(FullProfile(), 0, SELECTION)
    assert [n for n, _ in P.block(4, 8)] == [5, 6, 7, 8]
    assert all(np.array_equal(chosen, np.arange(1, n + 1)) for n, chosen in P.block(4, 8))


def test_uniform_subset_model_uses_random_cardinality():
    P = NumeratorChoice(UniformSubsetProfile(), 0)
    assert P.stream_key(10)[1] != NumeratorChoice(FullProfile(), 0).stream_key(10)[1]
    assert UniformSubsetProfile().expected(9) == Fraction(9, 2)
    with pytest.raises(InputError):
        UniformSubsetProfile().value(9)


def test_parse_profile():
    assert isinstance(parse_profile("full"), FullProfile)
    assert isinstance(parse_profile("phi"), PhiProfile)
    assert parse_profile("constant 3").value(2) == 2
    assert parse_profile("constant 3").value(10) == 3
    assert list(parse_profile("linear 1/2").values(0, 5)) == [1, 1, 2, 2, 3]
    assert parse_profile("uniform").random_cardinality
    for bad in ("", "linear", "linear 3/2", "constant x", "triangular"):
        with pytest.raises(InputError):
            parse_profile(bad)


def test_profile_values_match_value():
    for profile in (FullProfile(), ConstantProfile(4), LinearProfile(Fraction(2, 3)), PhiProfile()):
        assert list(profile.values(10, 30)) == [profile.value(n) for n in range(11, 31)]
        assert profile.block_sum(10, 30) == sum(profile.value(n) for n in range(11, 31))


def test_explicit_profile_from_csv(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("n,f\n# comment\n1,1\n4,2\n9,3\n", encoding="utf-8")
    profile = parse_profile("explicit file=f.csv", base_dir=str(tmp_path))
    assert [profile.value(n) for n in (1, 2, 4, 9)] == [1, 0, 2, 3]
    with pytest.raises(InputError):
        ExplicitProfile({3: 4})
    with pytest.raises(InputError):
        parse_profile("explicit file=missing.csv", base_dir=str(tmp_path))


def test_binomial_chebyshev_bound():
    assert binomial_chebyshev_bound(1) == Fraction(4)
    assert binomial_chebyshev_bound(1000) == Fraction(8, 1000 * 1001)


def test_binomial_concentration_rarely_fails():
    summary = binomial_concentration_experiment(200, 300, seed=0)
    assert summary.failures == 0
    assert summary.passed


def test_subset_frequencies_and_chi_square_are_deterministic():
    first = inclusion_frequencies(10, 5, 500, seed=1)
    assert first.sum() == 5 * 500
    assert np.array_equal(first, inclusion_frequencies(10, 5, 500, seed=1))
    report = chi_square_uniformity(6, 3, 400, seed=1)
    assert report.dof == 19
    assert report.statistic == chi_square_uniformity(6, 3, 400, seed=1).statistic
    histogram = cardinality_histogram_check(40, 400, seed=1)
    assert histogram.dof >= 1
    assert 0.0 <= histogram.p_value <= 1.0


def test_lemma_elementary():
    assert lemma_elementary_check(100) == []
