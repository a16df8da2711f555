"""
tests/test_counterexample.py

反例 Ψ の構成と各種台帳のテスト
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dlab.arith import RealBracket, exact_bracket
from dlab.counterexample import (GEOMETRIC, TAU_LOGLOGLOG, ChainRow, CoefficientSpec, TauSpec, build, collapse_check,
                                 divergence_ledger, growth_profile, phi_series_check, sweet_spot_profile,
                                 verify_containment, verify_measure_vanishing)
from dlab.errors import InputError, ValidationError

HALVES = CoefficientSpec.parse("geometric 1/2")
SPEC = build(HALVES, TauSpec(), [0, 3, 5, 8])


def test_keys_and_factorials():
    assert SPEC.J == 3
    assert SPEC.K == (6, 120, 40320)
    assert SPEC.keys(1) == [6, 3, 2]
    assert SPEC.keys(2) == [120, 60, 40, 30, 24]
    assert SPEC.keys(3)[-1] == 5040
    with pytest.raises(InputError):
        SPEC.keys(4)


def test_psi_values_on_support():
    assert SPEC.psi.value(3) == Fraction(1, 12)
    assert SPEC.psi.value(60) == Fraction(1, 480)
    assert SPEC.psi.value(7) == 0
    assert SPEC.radius(3) == Fraction(1, 8 * 40320)
    assert len(SPEC.psi.keys) == 3 + 5 + 8


@pytest.mark.parametrize("M", [[1, 3], [0], [0, 1], [0, 3, 4], [0, 5, 3]])
def test_build_rejects_bad_sequences(M):
    with pytest.raises(ValidationError):
        build(HALVES, TauSpec(), M)


def test_measure_ledger():
    ledger = verify_measure_vanishing(SPEC)
    first, second, third = ledger.rows
    assert first.capped and first.measure == Fraction(11, 12)
    assert not second.capped and second.measure == Fraction(1, 2) - Fraction(1, 480)
    assert third.measure == Fraction(1, 4) - Fraction(1, 8 * 40320)
    assert ledger.holds
    assert ledger.bound == 2 * HALVES.total(3)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_containment_exact(j):
    result = verify_containment(SPEC, j)
    assert result.method == "exact"
    assert result.holds and result.failures == []


def test_containment_structural_for_large_factorials():
    spec = build(HALVES, TauSpec(), [0, 3, 9])
    result = verify_containment(spec, 2)
    assert result.method == "structural"
    assert result.holds


def test_phi_series_rows():
    rows = phi_series_check(SPEC, J=2)
    assert [row.value for row in rows] == [Fraction(5, 12), Fraction(1, 6)]
    assert all(row.complete and row.holds for row in rows)


def test_divergence_chain_holds():
    rows = divergence_ledger(SPEC, growth_profile(SPEC))
    assert [row.j for row in rows] == [1, 2, 3]
    assert all(row.holds for row in rows)
    # M が小さいうちは (Mj) は成り立たない
    assert not rows[0].mj_satisfied


def test_divergence_chain_steps_are_certified_or_equal():
    rows = divergence_ledger(SPEC, growth_profile(SPEC))
    # ブロック1のキー 6, 3, 2 はすべて下限 16 で評価されるので T1 = T2
    assert rows[0].equal_terms
    assert rows[0].steps[1] == ("k<k", True, False, True)
    for row in rows[1:]:
        assert not row.equal_terms
        assert all(certified for _, _, certified, _ in row.steps)
    assert all(row.holds and row.not_refuted for row in rows)


def test_chain_row_needs_more_than_tolerance():
    third = Fraction(1, 3)
    tiny = Fraction(1, 10**20)
    zero = exact_bracket(Fraction(0))
    row = ChainRow(1, third, RealBracket(third - tiny, third + tiny), zero, zero, zero)
    assert row.not_refuted
    assert row.steps[0] == ("fbound", True, False, False)
    assert not row.holds
    assert ChainRow(1, third, exact_bracket(Fraction(1, 4)), zero, zero, zero).holds


def test_collapse_check():
    result = collapse_check(SPEC)
    assert result.checked and result.holds
    assert result.all_layers == result.top_layers


def test_sweet_spot_profile_follows_growth_on_support():
    profile = sweet_spot_profile(SPEC, Fraction(1))
    growth = growth_profile(SPEC)
    for k in SPEC.all_keys():
        assert profile.value(k) == growth.value(k) <= k
    assert 0 < profile.value(1000) <= 1000
    with pytest.raises(InputError):
        sweet_spot_profile(SPEC, Fraction(0))


def test_coefficient_spec_parsing():
    assert CoefficientSpec.parse("geometric 1/2")(3) == Fraction(1, 8)
    assert CoefficientSpec.parse("inverse_square 1")(2) == Fraction(1, 4)
    explicit = CoefficientSpec.parse("explicit [1/2, 1/4]")
    assert explicit(2) == Fraction(1, 4)
    assert CoefficientSpec.parse(explicit.to_text()) == explicit
    assert HALVES.kind == GEOMETRIC
    for bad in ("geometric 2", "geometric x", "triangle 1/2", "explicit []"):
        with pytest.raises(InputError):
            CoefficientSpec.parse(bad)
    with pytest.raises(InputError):
        explicit(3)


def test_tau_spec():
    assert TauSpec(TAU_LOGLOGLOG).bracket(10).lower > 0
    assert TauSpec().bracket(10**6).upper < TauSpec().bracket(16).lower
    with pytest.raises(InputError):
        TauSpec("exp")


@st.composite
def block_sequences(draw):
    gaps = draw(st.lists(st.integers(min_value=2, max_value=3), min_size=1, max_size=3))
    M = [0]
    for gap in gaps:
        M.append(M[-1] + gap)
    return M


@settings(max_examples=30, deadline=None)
@given(block_sequences())
def test_random_sequences_build_consistent_ledgers(M):
    spec = build(HALVES, TauSpec(), M)
    keys = spec.all_keys()
    assert len(set(keys)) == len(keys)
    for j in range(1, spec.J + 1):
        assert all(spec.psi.value(k) == spec.radius(j) for k in spec.keys(j))
    assert verify_measure_vanishing(spec).holds
