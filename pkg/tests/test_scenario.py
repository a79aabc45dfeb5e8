from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simstudent.entities import Attribute, FigureRef
from simstudent.errors import ConfigError, NonPositiveValue, UnspecifiedFigure
from simstudent.scenario import (
    Conflict,
    ScenarioState,
    assert_fact,
    consistent,
    default_scenario,
    empty_state,
    load_scenario,
    query,
    state_from_record,
    state_to_record,
)

L, W, H, V, SF = (
    Attribute.LENGTH,
    Attribute.WIDTH,
    Attribute.HEIGHT,
    Attribute.VOLUME,
    Attribute.SCALE_FACTOR,
)
LEFT, RIGHT = FigureRef.LEFT, FigureRef.RIGHT


def build(facts):
    state = empty_state()
    for figure, attr, value in facts:
        state = assert_fact(state, figure, attr, Fraction(value))
        assert isinstance(state, ScenarioState), f"unexpected conflict on {facts}"
    return state


class TestAssertFact:
    def test_first_fact(self):
        state = assert_fact(empty_state(), LEFT, L, Fraction(5))
        assert state.left[L] == 5
        assert state.scale_factor() is None

    def test_scale_derived_from_pair(self):
        state = build([(LEFT, L, 5), (RIGHT, L, 10)])
        assert state.scale_factor() == 2

    def test_similarity_conflict(self):
        state = build([(LEFT, L, 5), (RIGHT, L, 10), (LEFT, W, 3)])
        result = assert_fact(state, RIGHT, W, Fraction(7))
        assert isinstance(result, Conflict)
        assert result.attribute is W
        assert result.expected == 6
        assert result.actual == 7
        # original state untouched
        assert W not in state.right

    def test_same_side_contradiction(self):
        state = build([(LEFT, L, 5)])
        result = assert_fact(state, LEFT, L, Fraction(6))
        assert isinstance(result, Conflict)
        assert result.expected == 5

    def test_reassert_same_value_ok(self):
        state = build([(LEFT, L, 5)])
        again = assert_fact(state, LEFT, L, Fraction(5))
        assert isinstance(again, ScenarioState)

    def test_non_positive_rejected(self):
        with pytest.raises(NonPositiveValue):
            assert_fact(empty_state(), LEFT, L, Fraction(0))
        with pytest.raises(NonPositiveValue):
            assert_fact(empty_state(), LEFT, L, Fraction(-3))

    def test_unspecified_figure_rejected(self):
        with pytest.raises(UnspecifiedFigure):
            assert_fact(empty_state(), FigureRef.UNSPECIFIED, L, Fraction(1))

    def test_derived_attributes_rejected(self):
        with pytest.raises(ValueError):
            assert_fact(empty_state(), LEFT, V, Fraction(8))
        with pytest.raises(ValueError):
            assert_fact(empty_state(), LEFT, SF, Fraction(2))

    def test_immutability(self):
        state = empty_state()
        new = assert_fact(state, LEFT, L, Fraction(5))
        assert state.left == {}
        assert new.left == {L: Fraction(5)}


class TestQuery:
    def test_scale_factor_ignores_figure(self):
        state = build([(LEFT, L, 5), (RIGHT, L, 10)])
        assert query(state, None, SF) == 2
        assert query(state, LEFT, SF) == 2

    def test_volume_direct(self):
        state = build([(LEFT, L, 2), (LEFT, W, 3), (LEFT, H, 4)])
        assert query(state, LEFT, V) == 24

    def test_volume_via_scale_factor(self):
        # brute force: right dims are 4, 6, 8 so volume is 192; also k^3 * 24
        state = build([(LEFT, L, 2), (LEFT, W, 3), (LEFT, H, 4), (RIGHT, L, 4)])
        direct = Fraction(4) * Fraction(6) * Fraction(8)
        assert direct == Fraction(2) ** 3 * Fraction(24)
        assert query(state, RIGHT, V) == direct == 192

    def test_dimension_via_scale_factor(self):
        state = build([(LEFT, L, 5), (RIGHT, L, 10), (LEFT, W, 3)])
        assert query(state, RIGHT, W) == 6

    def test_unknown_is_none(self):
        state = build([(LEFT, L, 5), (RIGHT, L, 10)])
        assert query(state, LEFT, W) is None
        assert query(state, LEFT, V) is None
        assert query(empty_state(), None, SF) is None
        assert query(state, FigureRef.UNSPECIFIED, W) is None


class TestConsistency:
    def test_empty_consistent(self):
        assert consistent(empty_state())

    def test_matching_ratios(self):
        state = build([(LEFT, L, 5), (RIGHT, L, 10), (LEFT, W, 4), (RIGHT, W, 8)])
        assert consistent(state)

    def test_assert_fact_never_builds_inconsistent_state(self):
        state = build([(LEFT, L, 5), (RIGHT, L, 10)])
        result = assert_fact(state, RIGHT, W, Fraction(7))
        if isinstance(result, ScenarioState):
            assert consistent(result)
        else:
            assert consistent(state)


positive_fractions = st.builds(
    Fraction,
    st.integers(min_value=1, max_value=60),
    st.integers(min_value=1, max_value=60),
)


@given(
    dims=st.tuples(positive_fractions, positive_fractions, positive_fractions),
    k=positive_fractions,
    subset=st.sets(st.sampled_from([0, 1, 2])),
    order_seed=st.randoms(use_true_random=False),
)
@settings(max_examples=150, deadline=None)
def test_closure_against_brute_force(dims, k, subset, order_seed):
    attrs = (L, W, H)
    facts = [(LEFT, attrs[i], dims[i]) for i in range(3)]
    facts += [(RIGHT, attrs[i], dims[i] * k) for i in sorted(subset)]
    order_seed.shuffle(facts)
    state = empty_state()
    for figure, attr, value in facts:
        state = assert_fact(state, figure, attr, value)
        assert isinstance(state, ScenarioState)
    if subset:
        assert state.scale_factor() == k
        assert query(state, None, SF) == k
        for i in range(3):
            assert query(state, LEFT, attrs[i]) == dims[i]
            assert query(state, RIGHT, attrs[i]) == dims[i] * k
        left_volume = dims[0] * dims[1] * dims[2]
        assert query(state, LEFT, V) == left_volume
        assert query(state, RIGHT, V) == k**3 * left_volume


@given(
    dims=st.tuples(positive_fractions, positive_fractions),
    k=positive_fractions,
)
@settings(max_examples=100, deadline=None)
def test_order_independence(dims, k):
    facts = [
        (LEFT, L, dims[0]),
        (RIGHT, L, dims[0] * k),
        (LEFT, W, dims[1]),
        (RIGHT, W, dims[1] * k),
    ]
    forward = empty_state()
    for f in facts:
        forward = assert_fact(forward, *f)
    backward = empty_state()
    for f in reversed(facts):
        backward = assert_fact(backward, *f)
    for figure in (LEFT, RIGHT):
        for attr in (L, W, H, V):
            assert query(forward, figure, attr) == query(backward, figure, attr)
    assert forward.scale_factor() == backward.scale_factor() == k


class TestSerialization:
    def test_round_trip(self):
        state = default_scenario()
        record = state_to_record(state)
        rebuilt = state_from_record(record)
        assert rebuilt.left == state.left
        assert rebuilt.right == state.right

    def test_default_scenario_shape(self):
        state = default_scenario()
        assert state.left == {L: 5, W: 3, H: 4}
        assert state.right == {L: 10}
        assert state.scale_factor() == 2

    def test_bad_records_rejected(self):
        with pytest.raises(ConfigError):
            state_from_record({"left": {"volume": "8"}})
        with pytest.raises(ConfigError):
            state_from_record({"left": {"length": "-1"}})
        with pytest.raises(ConfigError):
            state_from_record(
                {"left": {"length": "2", "width": "2"}, "right": {"length": "4", "width": "10"}}
            )

    def test_load_scenario_file(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text('{"left": {"length": "6"}, "right": {"length": "3"}}')
        state = load_scenario(path)
        assert state.scale_factor() == Fraction(1, 2)
        with pytest.raises(ConfigError):
            load_scenario(tmp_path / "missing.json")
