import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from daas import oracles
from daas.errors import ScenarioError
from daas.linkstate import (
    ClassSpec,
    Placement,
    Policy,
    SpectrumState,
    apply_placement,
    compact,
    fragmentation_blocked,
    make_scenario,
    placements,
    remove_call,
    render,
)

A, B = 0, 1
FIG1 = make_scenario(6, [2, 3], [1.0, 1.0], defrag_rate=1.0)
FIG1_FF = FIG1.replace(policy=Policy.FIRST_FIT)


def test_empty_state_random_fit_has_five_placements():
    spots = placements(SpectrumState.empty(6), A, FIG1)
    assert [p.start for p in spots] == [0, 1, 2, 3, 4]


def test_two_placements_in_the_size_three_gap():
    s = SpectrumState((A,), (1, 3))
    spots = placements(s, A, FIG1)
    assert len(spots) == 2
    assert {p.gap for p in spots} == {1}
    assert [p.start for p in spots] == [3, 4]


def test_no_placement_when_demand_exceeds_free_slots():
    # a demand above capacity is rejected by Scenario itself
    full = SpectrumState((A, A, A), (0, 0, 0, 0))
    assert placements(full, B, FIG1) == []
    assert placements(SpectrumState((B,), (1, 2)), B, FIG1) == []


def test_first_fit_single_placement_at_slot_zero():
    spots = placements(SpectrumState.empty(6), A, FIG1_FF)
    assert spots == [Placement(0, 0, 0, 2)]


def test_first_fit_scans_gaps_left_to_right():
    s = SpectrumState((A, A), (1, 2, 0))
    assert [p.start for p in placements(s, A, FIG1_FF)] == [3]


@pytest.mark.parametrize("start, gaps", [(0, (0, 4)), (2, (2, 2))])
def test_apply_placement_on_empty_link(start, gaps):
    empty = SpectrumState.empty(6)
    p = next(p for p in placements(empty, A, FIG1) if p.start == start)
    assert apply_placement(empty, A, p) == SpectrumState((A,), gaps)


def test_apply_placement_next_to_existing_call():
    s = SpectrumState((A,), (1, 3))
    got = apply_placement(s, A, Placement(1, 1, 4, 2))
    assert got == SpectrumState((A, A), (1, 1, 0))
    assert oracles.to_bitmap(got, FIG1) == oracles.bitmap_place(oracles.to_bitmap(s, FIG1), 4, A, 2)


def test_apply_placement_rejects_bad_placement():
    with pytest.raises(AssertionError):
        apply_placement(SpectrumState((A,), (1, 3)), A, Placement(0, 0, 0, 2))


def test_remove_last_call_gives_empty_link():
    assert remove_call(SpectrumState((A,), (0, 4)), 0, FIG1) == SpectrumState.empty(6)


def test_remove_merges_flanking_gaps():
    s = SpectrumState((A, A), (1, 0, 1))
    got = remove_call(s, 0, FIG1)
    assert got == SpectrumState((A,), (3, 1))
    assert oracles.to_bitmap(got, FIG1) == oracles.bitmap_remove(oracles.to_bitmap(s, FIG1), 0)


def test_remove_out_of_range():
    with pytest.raises(AssertionError):
        remove_call(SpectrumState((A,), (0, 4)), 1, FIG1)


def test_remove_then_replace_round_trip():
    s = SpectrumState((A, B), (1, 0, 0))
    removed = remove_call(s, 1, FIG1)
    back = next(p for p in placements(removed, B, FIG1) if p.start == 3)
    assert apply_placement(removed, B, back) == s


def test_fragmentation_blocked_examples():
    assert fragmentation_blocked(SpectrumState((A, A), (1, 0, 1)), A, FIG1)
    assert not fragmentation_blocked(SpectrumState.empty(6), A, FIG1)
    assert not fragmentation_blocked(SpectrumState.empty(6), B, FIG1)
    # too few free slots is resource blocking, not fragmentation
    assert not fragmentation_blocked(SpectrumState((B, A), (0, 0, 1)), A, FIG1)


def test_fragmentation_set_of_two_slot_class():
    blocked = [oracles.from_bitmap(b) for b in oracles.all_bitmaps(6, [2, 3])
               if oracles.bitmap_fragmentation_blocked(b, 2)]
    assert sorted(s.gaps for s in blocked) == [(0, 1, 1), (1, 0, 1), (1, 1, 0)]
    assert all(s.calls == (A, A) for s in blocked)
    assert all(fragmentation_blocked(s, A, FIG1) for s in blocked)


def test_compact_examples():
    assert compact(SpectrumState((A, A), (1, 0, 1))) == SpectrumState((A, A), (0, 0, 2))
    done = SpectrumState((A, B), (0, 0, 1))
    assert compact(done) == done
    assert compact(SpectrumState.empty(6)) == SpectrumState.empty(6)


def test_render():
    assert render(SpectrumState((A, A), (1, 0, 1)), FIG1) == ".AAaa."
    assert render(SpectrumState((B, A), (0, 1, 0)), FIG1) == "BBB.aa"
    assert render(SpectrumState.empty(6), FIG1) == "......"


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        make_scenario(3, [4], 1.0)
    with pytest.raises(ScenarioError):
        ClassSpec(0, 1.0)
    with pytest.raises(ScenarioError):
        ClassSpec(2, 0.0)
    with pytest.raises(ScenarioError):
        ClassSpec(2, 1.0, -1.0)
    with pytest.raises(ScenarioError):
        make_scenario(6, [2], 1.0, defrag_rate=-1)
    with pytest.raises(ScenarioError):
        Policy.parse("best_fit")
    assert Policy.parse("FF") is Policy.FIRST_FIT
    assert Policy.parse("random-fit") is Policy.RANDOM_FIT


# ---------------------------------------------------------------- properties

@st.composite
def link_states(draw, max_capacity=12):
    demands = draw(st.lists(st.integers(1, 4), min_size=1, max_size=3))
    capacity = draw(st.integers(max(demands), max_capacity))
    policy = draw(st.sampled_from(list(Policy)))
    sc = make_scenario(capacity, demands, 1.0, policy=policy)
    # random walk of arrivals and departures from the empty link
    state = SpectrumState.empty(capacity)
    for _ in range(draw(st.integers(0, 12))):
        if state.calls and draw(st.booleans()):
            state = remove_call(state, draw(st.integers(0, len(state.calls) - 1)), sc)
        else:
            k = draw(st.integers(0, len(demands) - 1))
            spots = placements(state, k, sc)
            if spots:
                state = apply_placement(state, k, spots[draw(st.integers(0, len(spots) - 1))])
    return sc, state


@settings(max_examples=300, deadline=None)
@given(link_states())
def test_slot_conservation_after_every_operation(case):
    sc, s = case
    s.check(sc)
    for k in range(sc.num_classes):
        for p in placements(s, k, sc):
            apply_placement(s, k, p).check(sc)
    for pos in range(len(s.calls)):
        remove_call(s, pos, sc).check(sc)
    compact(s).check(sc)


@settings(max_examples=300, deadline=None)
@given(link_states())
def test_successors_are_distinct(case):
    sc, s = case
    for k in range(sc.num_classes):
        spots = placements(s, k, sc)
        assert len({apply_placement(s, k, p) for p in spots}) == len(spots)
        assert [p.start for p in spots] == sorted(p.start for p in spots)


@settings(max_examples=300, deadline=None)
@given(link_states())
def test_compact_idempotent_and_order_preserving(case):
    sc, s = case
    c = compact(s)
    assert compact(c) == c
    assert c.calls == s.calls
    assert c.free_slots == s.free_slots


@settings(max_examples=300, deadline=None)
@given(link_states())
def test_fragmentation_is_cured_by_compaction(case):
    sc, s = case
    rf = sc.replace(policy=Policy.RANDOM_FIT)
    for k in range(sc.num_classes):
        if fragmentation_blocked(s, k, sc):
            assert compact(s) != s
            assert placements(compact(s), k, rf)
            assert not fragmentation_blocked(compact(s), k, sc)


@settings(max_examples=300, deadline=None)
@given(link_states())
def test_bitmap_round_trip(case):
    sc, s = case
    bm = oracles.to_bitmap(s, sc)
    assert len(bm) == sc.capacity
    assert oracles.from_bitmap(bm) == s
    assert oracles.from_bitmap(oracles.bitmap_compact(bm)) == compact(s)


@pytest.mark.parametrize("demands", [(1,), (2,), (1, 2), (2, 3), (1, 3), (3, 2, 1)])
def test_bitmap_oracle_equivalence(demands):
    for capacity in range(max(demands), 9):
        sc = make_scenario(capacity, demands, 1.0)
        ff = sc.replace(policy=Policy.FIRST_FIT)
        for bm in oracles.all_bitmaps(capacity, demands):
            s = oracles.from_bitmap(bm)
            for k, d in enumerate(demands):
                starts = oracles.bitmap_starts(bm, d)
                assert [p.start for p in placements(s, k, sc)] == starts
                assert [p.start for p in placements(s, k, ff)] == starts[:1]
                assert fragmentation_blocked(s, k, sc) == oracles.bitmap_fragmentation_blocked(bm, d)
                for p in placements(s, k, sc):
                    assert oracles.to_bitmap(apply_placement(s, k, p), sc) == \
                        oracles.bitmap_place(bm, p.start, k, d)
            for pos in range(len(s.calls)):
                assert oracles.to_bitmap(remove_call(s, pos, sc), sc) == oracles.bitmap_remove(bm, pos)
