import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import KVA_PER_CCF, scenario, spike
from nhpt.costs import UpgradeKind, neighborhood_carbon, neighborhood_cost, utility
from nhpt.entities import IncomeGroup
from nhpt.neighborhoods import (
    InvariantViolation,
    Neighborhood,
    StaleNeighborhoodError,
    TransitionState,
    apply_shutdown,
    assess,
    enumerate_neighborhoods,
)
from nhpt.network import weakly_connected_components


def E(t, h, i=0):
    return (t, h, i)


def by_index(state):
    return {n.pseudo_index: n.edges for n in enumerate_neighborhoods(state)}


class TestEnumerate:
    def test_path(self):
        s = scenario([("s", "a", 0, 1, []), ("a", "b", 0, 1, [])])
        got = by_index(TransitionState.initial(s))
        assert got == {E("a", "b"): {E("a", "b")}, E("s", "a"): {E("s", "a"), E("a", "b")}}

    def test_weak_cycle_is_all_singletons(self):
        s = scenario([("s", "a", 0, 1, []), ("a", "b", 0, 1, []), ("s", "b", 0, 1, [])])
        assert all(edges == {k} for k, edges in by_index(TransitionState.initial(s)).items())

    def test_star(self):
        s = scenario([("s", "a", 0, 1, []), ("a", "b", 0, 1, []), ("a", "c", 0, 1, [])])
        got = by_index(TransitionState.initial(s))
        assert got[E("s", "a")] == {E("s", "a"), E("a", "b"), E("a", "c")}
        assert got[E("a", "b")] == {E("a", "b")}

    def test_every_live_edge_indexes_one_neighborhood(self):
        s = scenario([("s", "a", 0, 1, []), ("a", "b", 0, 1, []), ("a", "b", 1, 1, []),
                      ("b", "c", 0, 1, [])])
        ns = enumerate_neighborhoods(TransitionState.initial(s))
        assert sorted(n.pseudo_index for n in ns) == sorted(s.network.edges)


def one_home(rate=12.0, annual=1000.0):
    return scenario([("s", "a", 0, 100.0, [("h1", 0.0)])], [("h1", annual, "t0", "low")], rate=rate)


class TestApplyShutdown:
    def test_single_household(self):
        s = one_home()
        state = TransitionState.initial(s)
        n = enumerate_neighborhoods(state)[0]
        assert neighborhood_cost(n, state) == 13_800
        assert neighborhood_carbon(n, state) == pytest.approx(5.51, rel=1e-15)
        new, out = apply_shutdown(state, n)
        assert out.cost == 13_800
        assert out.carbon == pytest.approx(5.51, rel=1e-15)
        assert new.ledger.total == 13_800
        assert new.converted_households == {"h1"}
        assert new.live_network.nodes == {"s"}
        assert utility(n, state) == pytest.approx(5.51 / 13_800)

    def test_empty_neighborhood(self):
        s = scenario([("s", "a", 0, 50.0, [])], rate=10.0)
        state = TransitionState.initial(s)
        n = enumerate_neighborhoods(state)[0]
        new, out = apply_shutdown(state, n)
        assert out.cost == -500 and out.carbon == 0
        assert neighborhood_cost(n, state) == -500
        assert utility(n, state) == math.inf

    def test_overload_buys_pole_top(self):
        usage = spike(10.0 / KVA_PER_CCF)
        s = scenario([("s", "a", 0, 1.0, [("h1", 0.0)])], [("h1", usage, "t0", "low")],
                     transformers={"t0": (25.0, 30.0)})
        state = TransitionState.initial(s)
        n = enumerate_neighborhoods(state)[0]
        assert state.peak("t0", frozenset({"h1"})) == pytest.approx(40.0)
        new, out = apply_shutdown(state, n)
        (tid, action), = out.upgrades
        assert tid == "t0" and action.kind is UpgradeKind.UPGRADE_POLE_TOP
        assert action.cost == pytest.approx(16_650)
        assert new.ledger.upgrades == pytest.approx(16_650)
        assert new.effective_capacity("t0") == 50.0

    def test_stale_neighborhood_carries_recomputed(self):
        s = scenario([("s", "a", 0, 1, []), ("a", "b", 0, 1, []), ("a", "c", 0, 1, [])])
        state = TransitionState.initial(s)
        ns = {n.pseudo_index: n for n in enumerate_neighborhoods(state)}
        state, _ = apply_shutdown(state, ns[E("a", "b")])
        with pytest.raises(StaleNeighborhoodError) as info:
            apply_shutdown(state, ns[E("s", "a")])
        assert info.value.recomputed.edges == {E("s", "a"), E("a", "c")}
        with pytest.raises(StaleNeighborhoodError):
            neighborhood_cost(ns[E("a", "b")], state)

    def test_already_converted_household(self):
        s = one_home()
        state = TransitionState.initial(s)
        n = enumerate_neighborhoods(state)[0]
        tampered = TransitionState(s, state.live_network, frozenset({"h1"}), state.decommissioned_edges,
                                   state.upgraded_transformers, state.ledger, state.converted_by_transformer)
        with pytest.raises(InvariantViolation):
            apply_shutdown(tampered, n)

    def test_subset_dependency_is_structural(self):
        s = scenario([("s", "a", 0, 1, []), ("a", "b", 0, 1, []), ("b", "c", 0, 1, [])])
        state = TransitionState.initial(s)
        ns = {n.pseudo_index: n for n in enumerate_neighborhoods(state)}
        n1 = ns[E("a", "b")]
        assert ns[E("b", "c")].edges < n1.edges
        state, _ = apply_shutdown(state, n1)
        assert not any(k in n1.edges for k in by_index(state))

    def test_group_is_plurality_with_ties_to_lower(self):
        s = scenario([("s", "a", 0, 1, [("h1", 0), ("h2", 0), ("h3", 0), ("h4", 0)])],
                     [("h1", 10, "t0", "high"), ("h2", 10, "t0", "high"),
                      ("h3", 10, "t0", "medium"), ("h4", 10, "t0", "medium")])
        state = TransitionState.initial(s)
        assert assess(enumerate_neighborhoods(state)[0], state).group is IncomeGroup.MEDIUM

    def test_converted_member_contributes_no_carbon(self):
        s = scenario([("s", "a", 0, 1, [("h1", 0), ("h2", 0)])],
                     [("h1", 1000, "t0", "low"), ("h2", 500, "t0", "low")])
        state = TransitionState.initial(s)
        n = enumerate_neighborhoods(state)[0]
        assert neighborhood_carbon(n, state) == pytest.approx(8.265)
        partly = TransitionState(s, state.live_network, frozenset({"h2"}), state.decommissioned_edges,
                                 state.upgraded_transformers, state.ledger, state.converted_by_transformer)
        assert neighborhood_carbon(n, partly) == pytest.approx(5.51)


@st.composite
def random_cities(draw):
    n = draw(st.integers(2, 12))
    edges, homes = [], []
    for child in range(1, n):
        parent = draw(st.integers(0, child - 1))
        attached = []
        for j in range(draw(st.integers(0, 3))):
            hid = f"h{child}_{j}"
            attached.append((hid, draw(st.floats(0, 30))))
            homes.append((hid, draw(st.floats(0, 3000)), f"t{draw(st.integers(0, 2))}",
                          draw(st.sampled_from(["low", "medium", "high"]))))
        edges.append((f"n{parent}", f"n{child}", 0, draw(st.floats(1, 200)), attached))
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3))
    for i, (a, b) in enumerate(extra):
        if a != b:
            edges.append((f"n{a}", f"n{b}", 1 + i, 10.0, []))
    transformers = {f"t{i}": (draw(st.sampled_from([5.0, 15.0, 50.0, 120.0])), draw(st.floats(0, 6)))
                    for i in range(3)}
    order = draw(st.permutations(range(len(edges))))
    return scenario(edges, homes, transformers, median=900.0, rate=3.0, source="n0"), order


@given(random_cities())
def test_shutdown_sequences_keep_invariants(city):
    s, order = city
    state = TransitionState.initial(s)
    installs = upgrades = savings = 0.0
    for i in order:
        key = sorted(s.network.edges)[i]
        live = {n.pseudo_index: n for n in enumerate_neighborhoods(state)}
        if key not in live:
            continue
        n = live[key]
        estimate = neighborhood_cost(n, state)
        state, out = apply_shutdown(state, n)
        assert out.cost == estimate
        installs += out.installs
        upgrades += out.upgrade_cost
        savings += out.savings
        assert len(weakly_connected_components(state.live_network)) == 1
        attached = {h for e in state.live_network.edges.values() for h in e.attached_households}
        assert not attached & state.converted_households
    ledger = state.ledger
    assert ledger.installs == pytest.approx(installs) and ledger.upgrades == pytest.approx(upgrades)
    assert ledger.total == ledger.installs + ledger.upgrades - ledger.savings
    assert min(ledger.installs, ledger.upgrades, ledger.savings) >= 0
    assert len(state.upgraded_transformers) == len(set(state.upgraded_transformers))


def test_neighborhood_value_object():
    n = Neighborhood(E("a", "b"), frozenset({E("a", "b"), E("b", "c")}))
    assert n.sorted_edges() == [E("a", "b"), E("b", "c")]
