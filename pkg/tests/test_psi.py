"""
tests/test_psi.py

近似関数Ψの解析・評価とCatlin変換のテスト
"""

from fractions import Fraction
from math import log

import pytest
from hypothesis import given, strategies as st

from dlab.arith import harmonic_number
from dlab.errors import DomainError, InputError
from dlab.model import FullProfile, PhiProfile
from dlab.psi import (ClosedFormPsi, SparsePsi, ZeroPsi, catlin_series_partial, catlin_support, catlin_transform,
                      eval_bracket, evaluate, lift_witnesses, parse_psi, series_partial, series_trajectory)

COUNTEREXAMPLE_PSI = parse_psi("sparse {6:1/12, 3:1/12, 2:1/12, 120:1/480, 60:1/480, 40:1/480, 30:1/480, 24:1/480}")


def test_parse_closed_form_exact():
    psi = parse_psi("closed_form c=1/2 alpha=2")
    assert isinstance(psi, ClosedFormPsi) and psi.is_exact
    assert evaluate(psi, 3) == Fraction(1, 18)
    assert eval_bracket(psi, 3).width == 0


def test_closed_form_with_logarithm_is_approximated():
    psi = parse_psi("closed_form c=1 alpha=1 beta=1")
    assert not psi.is_exact
    with pytest.raises(DomainError):
        psi.value(1)
    value = psi.value(10)
    assert float(value) == pytest.approx(1 / (10 * log(10)), rel=1e-12)
    bracket = psi.bracket(10)
    assert bracket.lower < value < bracket.upper


def test_closed_form_rejects_increasing_functions():
    with pytest.raises(InputError):
        parse_psi("closed_form c=1 alpha=-1")
    assert not parse_psi("closed_form c=1 alpha=-1 monotone=false").monotone_decreasing


def test_closed_form_rejects_bad_parameters():
    with pytest.raises(InputError):
        parse_psi("closed_form c=0 alpha=2")
    with pytest.raises(InputError):
        parse_psi("closed_form c=1 gamma=2")
    with pytest.raises(InputError):
        parse_psi("closed_form c=x alpha=2")


def test_parse_sparse_and_zero():
    psi = parse_psi("sparse {120:1/480, 6:1/12}")
    assert isinstance(psi, SparsePsi)
    assert psi.keys == [6, 120]
    assert psi.value(7) == 0
    assert psi.value(120) == Fraction(1, 480)
    assert parse_psi(psi.to_text()) == psi
    assert parse_psi("zero").value(5) == 0
    with pytest.raises(InputError):
        parse_psi("sparse {6:0}")
    with pytest.raises(InputError):
        parse_psi("gaussian")


def test_sparse_rejects_duplicate_keys():
    with pytest.raises(InputError):
        SparsePsi(((6, Fraction(1)), (6, Fraction(1, 2))))


def test_psi_rejects_non_positive_argument():
    with pytest.raises(DomainError):
        ZeroPsi().value(0)
    with pytest.raises(DomainError):
        COUNTEREXAMPLE_PSI.value(-3)


@given(st.integers(min_value=1, max_value=200))
def test_series_partial_full_profile_is_harmonic(N):
    # Σ n · 1/n² = H_N
    assert series_partial(FullProfile(), parse_psi("closed_form c=1 alpha=2"), N) == harmonic_number(N)


def test_series_partial_sparse_with_huge_bound():
    total = series_partial(PhiProfile(), COUNTEREXAMPLE_PSI, 10**40)
    # 5c_1/6 + 2c_2/3 with c_1 = 1/2, c_2 = 1/4
    assert total == Fraction(5, 12) + Fraction(1, 6)
    assert series_partial(PhiProfile(), ZeroPsi(), 100) == 0
    with pytest.raises(InputError):
        series_partial(PhiProfile(), ZeroPsi(), 0)


def test_series_trajectory_is_cumulative():
    psi = parse_psi("closed_form c=1 alpha=2")
    trajectory = series_trajectory(FullProfile(), psi, [10, 5, 20])
    assert [N for N, _ in trajectory] == [5, 10, 20]
    assert [value for _, value in trajectory] == [harmonic_number(5), harmonic_number(10), harmonic_number(20)]


def test_catlin_transform_sparse():
    psi = parse_psi("sparse {6:1/12, 12:1/6}")
    value = catlin_transform(psi, 3)
    assert (value.value, value.multiplier, value.exact) == (Fraction(1, 6), 4, True)
    assert catlin_transform(psi, 5).value == 0
    truncated = catlin_transform(psi, 3, bound=2)
    assert (truncated.value, truncated.exact) == (Fraction(1, 12), False)


def test_catlin_transform_closed_forms():
    psi = parse_psi("closed_form c=1 alpha=2")
    assert catlin_transform(psi, 4).value == Fraction(1, 16)
    log_psi = parse_psi("closed_form c=1 alpha=1 beta=1")
    assert catlin_transform(log_psi, 1).multiplier == 2
    wild = parse_psi("closed_form c=1 alpha=-1 monotone=false")
    with pytest.raises(InputError):
        catlin_transform(wild, 2)
    assert catlin_transform(wild, 2, bound=3).multiplier == 3


def test_catlin_support_dominates_psi():
    table = catlin_support(COUNTEREXAMPLE_PSI)
    for key, value in COUNTEREXAMPLE_PSI.items():
        assert table[key].value >= value
    assert table[1].value == Fraction(1, 12)


def test_catlin_series_dominates_series():
    profile = PhiProfile()
    for N in (6, 60, 120):
        assert catlin_series_partial(profile, COUNTEREXAMPLE_PSI, N) >= series_partial(profile, COUNTEREXAMPLE_PSI, N)


@given(st.lists(st.fractions(min_value=0, max_value=1, max_denominator=1000), min_size=1, max_size=30))
def test_witness_lifting(points):
    report = lift_witnesses(COUNTEREXAMPLE_PSI, points)
    assert report.passed
    assert report.lifted == report.witnesses
    assert report.points == len(points)
