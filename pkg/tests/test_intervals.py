"""
tests/test_intervals.py

区間集合と球の和集合の測度エンジンのテスト
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlab import intervals
from dlab.errors import InputError, ResourceError
from dlab.intervals import (MODE_CERTIFIED, BallUnion, IntervalSet, MeasureBracket, RationalInterval,
                            approx_set, contains, full_residue_measure, intersect, layer_measure, measure,
                            residue_sweep_measures, thicken, union)

unit_fractions = st.fractions(min_value=0, max_value=1, max_denominator=24)


@st.composite
def interval_sets(draw):
    pairs = draw(st.lists(st.tuples(unit_fractions, unit_fractions), max_size=6))
    return IntervalSet((min(a, b), max(a, b)) for a, b in pairs)


def test_normalization_merges_overlapping_and_touching():
    S = IntervalSet([(Fraction(1, 8), Fraction(1, 2)), (Fraction(0), Fraction(1, 4)),
                     (Fraction(1, 2), Fraction(3, 4))])
    assert S.components == ((Fraction(0), Fraction(3, 4)),)
    assert measure(S) == Fraction(3, 4)


def test_normalization_clips_to_unit_interval_and_drops_empty():
    S = IntervalSet([(Fraction(-1, 4), Fraction(1, 4)), (Fraction(1, 2), Fraction(1, 2)),
                     (Fraction(7, 8), Fraction(5, 4))])
    assert S.components == ((Fraction(0), Fraction(1, 4)), (Fraction(7, 8), Fraction(1)))
    assert S.measure == Fraction(3, 8)


def test_intersect_and_contains():
    A = IntervalSet([(Fraction(0), Fraction(1, 2))])
    B = IntervalSet([(Fraction(1, 4), Fraction(3, 4))])
    assert intersect(A, B).components == ((Fraction(1, 4), Fraction(1, 2)),)
    assert contains(union(A, B), A)
    assert not contains(A, B)
    assert contains(A, IntervalSet.empty())


@given(interval_sets(), interval_sets())
def test_measure_inclusion_exclusion(A, B):
    assert measure(union(A, B)) + measure(intersect(A, B)) == measure(A) + measure(B)


@given(interval_sets(), interval_sets())
def test_union_contains_both_operands(A, B):
    U = union(A, B)
    assert contains(U, A) and contains(U, B)
    assert measure(U) <= measure(A) + measure(B)


def test_thicken():
    assert thicken([Fraction(1, 2)], Fraction(1, 4)).measure == Fraction(1, 2)
    assert thicken([Fraction(0), Fraction(1)], Fraction(1, 10)).measure == Fraction(1, 5)
    assert len(thicken([Fraction(1, 3)], 0)) == 0
    with pytest.raises(InputError):
        thicken([Fraction(1, 2)], Fraction(-1))
    with pytest.raises(InputError):
        thicken([Fraction(3, 2)], Fraction(1, 10))


@settings(max_examples=150)
@given(st.integers(min_value=1, max_value=60), st.data(),
       st.fractions(min_value=Fraction(1, 10**4), max_value=Fraction(1, 2), max_denominator=10**4))
def test_layer_measure_matches_interval_set(n, data, radius):
    numerators = data.draw(st.lists(st.integers(1, n), unique=True))
    expected = thicken([Fraction(a, n) for a in numerators], radius).measure
    assert layer_measure(n, numerators, radius).value == expected
    assert approx_set(n, numerators, radius).measure == expected


@given(st.integers(min_value=1, max_value=50),
       st.fractions(min_value=0, max_value=2, max_denominator=500))
def test_full_residue_closed_form(n, radius):
    assert full_residue_measure(n, radius) == layer_measure(n, range(1, n + 1), radius).value


def test_residue_sweep_matches_closed_form():
    for n in (1, 3, 8, 25):
        den = 4 * n * n
        numerators = list(range(8 * n + 1))
        swept = residue_sweep_measures(n, numerators, den)
        assert swept == [full_residue_measure(n, Fraction(j, den)) for j in numerators]


def test_residue_sweep_rejects_incompatible_denominator():
    with pytest.raises(InputError):
        residue_sweep_measures(3, [1], 10)


def test_approx_set_reduced_and_range():
    reduced = approx_set(4, [1, 2, 3], Fraction(1, 100), reduced=True)
    assert len(reduced) == 2
    with pytest.raises(InputError):
        approx_set(4, [5], Fraction(1, 100))


def test_ball_union_window_and_duplicates():
    # 1/2 と 2/4 は同じ球
    union_ = BallUnion.from_layers([(2, [1], Fraction(1, 4)), (4, [2], Fraction(1, 4))])
    assert len(union_) == 1
    assert union_.measure().value == Fraction(1, 2)
    assert union_.measure((Fraction(0), Fraction(1, 2))).value == Fraction(1, 4)
    assert union_.measure(RationalInterval(Fraction(3, 4), Fraction(1))).value == 0
    assert union_.component_count() == 1


def test_certified_mode_encloses_exact_value():
    rng = np.random.default_rng(7)
    layers = [(n, np.sort(rng.choice(n, size=n // 3, replace=False)) + 1, Fraction(1, 3 * n * n))
              for n in range(3, 400)]
    union_ = BallUnion.from_layers(layers)
    exact = union_.measure().value
    bracket = union_.measure(mode=MODE_CERTIFIED)
    assert not bracket.exact
    assert bracket.encloses(exact)
    assert bracket.width < Fraction(1, 10**6)
    window = RationalInterval(Fraction(1, 3), Fraction(1, 2))
    assert union_.measure(window, MODE_CERTIFIED).encloses(union_.measure(window).value)


def test_exact_mode_respects_component_limit(monkeypatch):
    monkeypatch.setattr(intervals, "EXACT_COMPONENT_LIMIT", 5)
    union_ = BallUnion.from_layer(50, range(1, 51), Fraction(1, 10**4))
    with pytest.raises(ResourceError):
        union_.measure()
    assert union_.measure(mode=MODE_CERTIFIED).upper > 0


def test_unknown_mode_is_rejected():
    with pytest.raises(InputError):
        BallUnion.empty().measure(mode="approximate")


def test_configure_validates_resolution():
    with pytest.raises(InputError):
        intervals.configure(resolution_bits=60)


def test_rational_interval_parse():
    I = RationalInterval.parse("[1/3, 2/3]")
    assert (I.lo, I.hi) == (Fraction(1, 3), Fraction(2, 3))
    assert I.length == Fraction(1, 3)
    assert I.numerator_range(6) == (2, 4)
    with pytest.raises(InputError):
        RationalInterval.parse("1/3")
    with pytest.raises(InputError):
        RationalInterval.parse("2/3,1/3")
    with pytest.raises(InputError):
        RationalInterval.parse("a,b")


def test_measure_bracket_helpers():
    bracket = MeasureBracket(Fraction(1, 4), Fraction(3, 4), False)
    assert bracket.value == Fraction(1, 2)
    assert bracket.scale(Fraction(2)).clamp().upper == 1
    assert str(MeasureBracket.of(Fraction(1, 3))) == "1/3"
