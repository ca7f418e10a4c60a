import math

import numpy as np
import pytest

from daas import ctmc, oracles
from daas.errors import StateSpaceTooLarge
from daas.linkstate import Policy, SpectrumState, compact, fragmentation_blocked, make_scenario

A, B = 0, 1
LAM1, LAM2, MU1, MU2, MUD = 0.7, 1.3, 1.1, 0.9, 2.5


@pytest.fixture(scope="module")
def fig1():
    sc = make_scenario(6, [2, 3], [LAM1, LAM2], [MU1, MU2], defrag_rate=MUD)
    space, q = ctmc.build(sc)
    return sc, space, q


def test_fig1_counts(fig1):
    sc, space, _ = fig1
    assert space.n_normal == oracles.count_states(6, [2, 3]) == 24
    assert space.n_daas == 3
    fb = [s for s in space.normal_states if fragmentation_blocked(s, A, sc)]
    assert len(fb) == 3
    assert {compact(s) for s in fb} == {SpectrumState((A, A), (0, 0, 2))}


def test_fig1_single_call_state_balance(fig1):
    sc, space, q = fig1
    s1 = space.index_of(SpectrumState((A,), (1, 3)))
    empty = space.index_of(SpectrumState.empty(6))
    assert -q.rate(s1, s1) == pytest.approx(LAM1 + LAM2 + MU1, abs=1e-15)
    assert q.rate(empty, s1) == pytest.approx(LAM1 / 5, abs=1e-15)
    inflow = q.offdiag[:, s1].tocoo()
    sources = {space.state_at(i)[1]: r for i, r in zip(inflow.row, inflow.data)}
    assert sources == pytest.approx({
        SpectrumState.empty(6): LAM1 / 5,
        SpectrumState((A, A), (1, 0, 1)): MU1,
        SpectrumState((A, A), (1, 1, 0)): MU1,
        SpectrumState((A, B), (1, 0, 0)): MU2,
    })


def test_fig1_daas_state_balance(fig1):
    sc, space, q = fig1
    sd = space.index_of(SpectrumState((A, A), (0, 0, 2)), ctmc.DAAS)
    inflow = q.offdiag[:, sd].tocoo()
    sources = sorted(space.state_at(i)[1].gaps for i in inflow.row)
    assert sources == [(0, 1, 1), (1, 0, 1), (1, 1, 0)]
    assert np.allclose(inflow.data, LAM1)
    row = q.offdiag[sd].tocoo()
    assert row.nnz == 1 and row.data[0] == MUD
    assert row.col[0] == space.index_of(SpectrumState((A, A), (0, 0, 2)))


def test_unit_demand_two_slots_is_erlang_birth_death():
    lam, mu = 1.7, 0.6
    sc = make_scenario(2, [1], [lam], [mu], defrag_rate=3.0)
    space, q = ctmc.build(sc)
    assert space.n_normal == 3 and space.n_daas == 0
    want = np.array([[-lam, lam, 0], [mu, -(lam + mu), lam], [0, 2 * mu, -2 * mu]])
    np.testing.assert_allclose(q.to_dense(), want, atol=1e-15)


def test_unit_demands_never_create_daas_states():
    sc = make_scenario(7, [1, 1, 1], [1.0, 2.0, 0.5], defrag_rate=10.0)
    space = ctmc.enumerate_states(sc)
    assert space.n_daas == 0
    assert space.n_normal == math.comb(7 + 3, 3)


def test_daas_disabled_has_no_daas_states():
    sc = make_scenario(8, [2, 3], 1.0, defrag_rate=0.0)
    assert ctmc.enumerate_states(sc).n_daas == 0


@pytest.mark.parametrize("demands", [(2,), (2, 3), (1, 3), (2, 2, 3), (3, 4)])
def test_first_fit_space_inside_random_fit_space(demands):
    for capacity in range(max(demands), 11):
        rf = make_scenario(capacity, demands, 1.0, defrag_rate=1.0)
        ff = rf.replace(policy=Policy.FIRST_FIT)
        rf_space = ctmc.enumerate_states(rf)
        ff_space = ctmc.enumerate_states(ff)
        assert set(ff_space.normal_states) <= set(rf_space.normal_states)
        assert set(ff_space.daas_states) <= set(rf_space.daas_states)
        assert rf_space.n_normal == oracles.count_states(capacity, demands)


def test_reference_link_counts():
    sc = make_scenario(20, [4, 6, 8], 1 / 3, defrag_rate=1.0)
    space = ctmc.enumerate_states(sc)
    assert space.n_normal == oracles.count_states(20, [4, 6, 8]) == 1319


def test_ordering_is_deterministic():
    sc = make_scenario(8, [2, 3], 1.0, defrag_rate=1.0)
    a = ctmc.enumerate_states(sc)
    b = ctmc.enumerate_states(sc)
    assert a.normal_states == b.normal_states and a.daas_states == b.daas_states
    keys = [s.sort_key() for s in a.normal_states]
    assert keys == sorted(keys)
    assert a.normal_states[0] == SpectrumState.empty(8)


def test_state_space_cap():
    sc = make_scenario(20, [4, 6, 8], 1.0)
    with pytest.raises(StateSpaceTooLarge, match="state space too large.*1000"):
        ctmc.enumerate_states(sc, max_entries=1000)


GENERATOR_CASES = [
    make_scenario(6, [2, 3], [LAM1, LAM2], [MU1, MU2], defrag_rate=MUD),
    make_scenario(6, [2, 3], [LAM1, LAM2], [MU1, MU2], defrag_rate=MUD, policy="ff"),
    make_scenario(10, [2, 3, 4], [0.3, 0.9, 0.4], [1.0, 2.0, 0.5], defrag_rate=4.0),
    make_scenario(9, [1, 3], [0.5, 0.8], [1.0, 1.5], defrag_rate=1.0, policy="ff"),
]


@pytest.mark.parametrize("sc", GENERATOR_CASES)
def test_generator_invariants(sc):
    space, q = ctmc.build(sc)
    dense = q.to_dense()
    assert np.abs(dense.sum(axis=1)).max() <= 1e-12
    assert (q.offdiag.diagonal() == 0).all()
    assert (q.offdiag.data >= 0).all()
    for i, s in enumerate(space.normal_states):
        out = {j: dense[i, j] for j in np.nonzero(dense[i])[0] if j != i}
        departures = sum(r for j, r in out.items()
                         if j < space.n_normal and len(space.normal_states[j].calls) < len(s.calls))
        assert departures == pytest.approx(sum(sc.classes[k].service_rate for k in s.calls), rel=1e-14)
        for k, cls in enumerate(sc.classes):
            # every arriving class-k call either lands somewhere or triggers DaaS or is lost
            admitted = sum(r for j, r in out.items() if j < space.n_normal
                           and space.normal_states[j].count(k) == s.count(k) + 1
                           and len(space.normal_states[j].calls) == len(s.calls) + 1)
            if s.max_gap >= cls.demand:
                assert admitted == pytest.approx(cls.arrival_rate, rel=1e-14)
            else:
                assert admitted == 0
    for nu in range(space.n_daas):
        row = q.offdiag[space.n_normal + nu].tocoo()
        assert row.nnz == 1 and row.data[0] == sc.defrag_rate


@pytest.mark.parametrize("sc", GENERATOR_CASES)
def test_disabled_generator_is_daas_generator_without_daas_edges(sc):
    space, q = ctmc.build(sc)
    space0, q0 = ctmc.build(sc.replace(defrag_rate=0.0))
    assert space0.normal_states == space.normal_states or sc.policy is Policy.FIRST_FIT
    # map the disabled chain's states into the enabled one and compare normal-to-normal rates
    idx = [space.index_of(s) for s in space0.normal_states]
    off = q.offdiag[:space.n_normal, :space.n_normal].toarray()
    np.testing.assert_array_equal(q0.offdiag.toarray(), off[np.ix_(idx, idx)])


def test_disabled_first_fit_space_can_be_smaller():
    # without defragmentation first fit never reaches some compacted patterns
    sc = make_scenario(10, [2, 3, 4], [0.3, 0.9, 0.4], defrag_rate=4.0, policy="ff")
    with_daas = set(ctmc.enumerate_states(sc).normal_states)
    without = set(ctmc.enumerate_states(sc.replace(defrag_rate=0.0)).normal_states)
    assert without <= with_daas


def test_gbe_residual_examples():
    lam, mu = 0.4, 1.9
    q = ctmc.build(make_scenario(1, [1], [lam], [mu]))[1]
    assert ctmc.gbe_residual(q, np.array([mu, lam]) / (lam + mu)) <= 1e-16
    assert ctmc.gbe_residual(q, np.array([0.5, 0.5])) > 0.1
    with pytest.raises(ValueError):
        ctmc.gbe_residual(q, np.ones(3) / 3)


def test_dump_states_table(fig1):
    sc, space, q = fig1
    text = ctmc.dump_states(sc, space, q, edges=True)
    lines = text.splitlines()
    assert lines[0] == "index\tkind\tpattern\tcalls\tgaps"
    assert lines[1] == "0\tnormal\t......\t\t6"
    assert sum(1 for l in lines if "\tdaas\t" in l) == 3
    assert "from\tto\trate" in lines
