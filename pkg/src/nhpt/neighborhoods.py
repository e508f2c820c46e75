"""Candidate neighborhoods and the shutdown simulation.

A :class:`TransitionState` is an immutable snapshot of the network part-way
through a transition. :func:`apply_shutdown` returns a new snapshot, so
what-if evaluation against one snapshot is safe.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType

from .costs import (
    OVERLOAD_RATIO,
    carbon_emissions,
    install_cost_for_usage,
    length_savings,
    upgrade_action,
)
from .entities import GROUPS, IncomeGroup
from .network import GasNetwork, UnknownEdgeError, cut_sets, downstream_edges, edge_sort_key


class StaleNeighborhoodError(RuntimeError):
    """The neighborhood no longer matches the live network."""

    def __init__(self, neighborhood, recomputed):
        self.neighborhood = neighborhood
        self.recomputed = recomputed
        super().__init__(f"neighborhood at {neighborhood.pseudo_index} is stale")


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class Neighborhood:
    pseudo_index: tuple
    edges: frozenset

    def sorted_edges(self) -> list:
        return sorted(self.edges, key=edge_sort_key)


@dataclass(frozen=True)
class _Static:
    """Parts of a neighborhood's assessment fixed by its edge set alone."""

    members: tuple
    installs: float
    carbon: float
    savings: float
    pipe_length: float
    by_transformer: tuple  # ((tid, frozenset(hids)), ...)
    group: IncomeGroup


@dataclass(frozen=True)
class Assessment:
    """Cost and carbon of shutting a neighborhood down from a given state."""

    neighborhood: Neighborhood
    installs: float
    upgrades: tuple  # ((tid, UpgradeAction), ...) for newly overloaded transformers
    savings: float
    carbon: float
    group: IncomeGroup
    members: tuple

    @property
    def upgrade_cost(self) -> float:
        total = 0.0
        for _, action in self.upgrades:
            total += action.cost
        return total

    @property
    def cost(self) -> float:
        return self.installs + self.upgrade_cost - self.savings

    @property
    def utility(self) -> float:
        cost = self.cost
        if cost <= 0:
            return float("inf")
        return self.carbon / cost


@dataclass(frozen=True)
class Ledger:
    """Running spend split into the three budget components, overall and per group."""

    installs: float = 0.0
    upgrades: float = 0.0
    savings: float = 0.0
    by_group: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    @property
    def total(self) -> float:
        return self.installs + self.upgrades - self.savings

    def group_total(self, group: IncomeGroup) -> float:
        i, u, s = self.by_group.get(group, (0.0, 0.0, 0.0))
        return i + u - s

    def add(self, group: IncomeGroup, installs: float, upgrades: float, savings: float) -> "Ledger":
        groups = dict(self.by_group)
        i, u, s = groups.get(group, (0.0, 0.0, 0.0))
        groups[group] = (i + installs, u + upgrades, s + savings)
        return Ledger(self.installs + installs, self.upgrades + upgrades, self.savings + savings,
                      MappingProxyType(groups))


@dataclass(frozen=True)
class RealizedOutcome:
    neighborhood: Neighborhood
    installs: float
    upgrades: tuple
    savings: float
    carbon: float
    group: IncomeGroup
    households: tuple

    @property
    def upgrade_cost(self) -> float:
        total = 0.0
        for _, action in self.upgrades:
            total += action.cost
        return total

    @property
    def cost(self) -> float:
        return self.installs + self.upgrade_cost - self.savings


@dataclass(frozen=True)
class TransitionState:
    scenario: object
    live_network: GasNetwork
    converted_households: frozenset
    decommissioned_edges: frozenset
    upgraded_transformers: MappingProxyType
    ledger: Ledger
    converted_by_transformer: MappingProxyType

    @classmethod
    def initial(cls, scenario) -> "TransitionState":
        converted = frozenset(h for h, hh in scenario.households.items() if hh.converted)
        by_t = {}
        for hid in converted:
            tid = scenario.households[hid].transformer_id
            by_t[tid] = by_t.get(tid, frozenset()) | {hid}
        return cls(scenario, scenario.network, converted, frozenset(), MappingProxyType({}),
                   Ledger(), MappingProxyType(by_t))

    def effective_capacity(self, tid) -> float:
        action = self.upgraded_transformers.get(tid)
        if action is not None:
            return action.capacity_after
        return self.scenario.transformers[tid].capacity_kva

    def peak(self, tid, extra=frozenset()) -> float:
        conv = self.converted_by_transformer.get(tid, frozenset())
        return self.scenario.peak_load(tid, conv | extra if extra else conv)


def _plurality_group(members, households) -> IncomeGroup:
    counts = Counter(households[h].income_group for h in members)
    best = max(counts.values(), default=0)
    for g in GROUPS:
        if counts.get(g, 0) == best:
            return g
    return GROUPS[0]


def _static(n: Neighborhood, state: TransitionState, book=None) -> _Static:
    scenario = state.scenario
    shared = book is None or book is scenario.book
    if shared:
        cached = scenario._static.get(n.edges)
        if cached is not None:
            return cached
        book = scenario.book
    k = book.constants
    net = scenario.network
    members, pipe = [], 0.0
    for key in n.sorted_edges():
        e = net.edges[key]
        members.extend(e.attached_households)
        pipe += e.pipe_length
    members.sort()
    installs = carbon = 0.0
    by_t = {}
    for hid in members:
        h = scenario.households[hid]
        installs += install_cost_for_usage(h.annual_gas, k)
        carbon += carbon_emissions(h.annual_gas, k)
        by_t.setdefault(h.transformer_id, []).append(hid)
    st = _Static(
        tuple(members), installs, carbon, length_savings(pipe, k), pipe,
        tuple((tid, frozenset(by_t[tid])) for tid in sorted(by_t)),
        _plurality_group(members, scenario.households),
    )
    if shared:
        scenario._static[n.edges] = st
    return st


def assess(n: Neighborhood, state: TransitionState, book=None) -> Assessment:
    """Estimate cost and carbon of ``n`` against ``state`` without changing it."""
    st = _static(n, state, book)
    book = book or state.scenario.book
    upgrades = []
    for tid, hids in st.by_transformer:
        if tid in state.upgraded_transformers:
            continue
        cap = state.effective_capacity(tid)
        limit = OVERLOAD_RATIO * cap
        pre = state.peak(tid)
        if pre > limit:
            continue
        post = state.peak(tid, hids)
        if post > limit:
            upgrades.append((tid, upgrade_action(cap, post, book)))
    return Assessment(n, st.installs, tuple(upgrades), st.savings, st.carbon, st.group, st.members)


def enumerate_neighborhoods(state: TransitionState) -> list[Neighborhood]:
    """One neighborhood per live edge, ordered by pseudo-index."""
    sets = _cut_sets(state.live_network)
    return [Neighborhood(k, sets[k]) for k in sorted(sets, key=edge_sort_key)]


def _cut_sets(network: GasNetwork) -> dict:
    cached = network.__dict__.get("_cut_sets")
    if cached is None:
        cached = cut_sets(network)
        network.__dict__["_cut_sets"] = cached
    return cached


def current_neighborhood(state: TransitionState, pseudo_index) -> Neighborhood | None:
    if pseudo_index not in state.live_network.edges:
        return None
    return Neighborhood(pseudo_index, _cut_sets(state.live_network)[pseudo_index])


def check_fresh(state: TransitionState, n: Neighborhood) -> None:
    live = state.live_network.edges
    if any(k not in live for k in n.edges) or n.pseudo_index not in live:
        raise StaleNeighborhoodError(n, current_neighborhood(state, n.pseudo_index))
    current = downstream_edges(state.live_network, n.pseudo_index)
    if current != n.edges:
        raise StaleNeighborhoodError(n, Neighborhood(n.pseudo_index, current))


def apply_shutdown(state: TransitionState, n: Neighborhood, costing=None):
    """Shut ``n`` down: returns ``(new_state, RealizedOutcome)``.

    ``costing`` defaults to the scenario's cost book.
    """
    check_fresh(state, n)
    a = assess(n, state, costing)
    already = [h for h in a.members if h in state.converted_households]
    if already:
        raise InvariantViolation(f"households already converted: {', '.join(map(str, already[:5]))}")
    scenario = state.scenario
    members = frozenset(a.members)
    by_t = dict(state.converted_by_transformer)
    for hid in a.members:
        tid = scenario.households[hid].transformer_id
        by_t[tid] = by_t.get(tid, frozenset()) | {hid}
    upgraded = dict(state.upgraded_transformers)
    for tid, action in a.upgrades:
        if tid in upgraded:
            raise InvariantViolation(f"transformer {tid} upgraded twice")
        upgraded[tid] = action
    try:
        live = state.live_network.without_edges(n.edges)
    except UnknownEdgeError as exc:  # pragma: no cover - guarded by check_fresh
        raise StaleNeighborhoodError(n, None) from exc
    new_state = TransitionState(
        scenario,
        live,
        state.converted_households | members,
        state.decommissioned_edges | n.edges,
        MappingProxyType(upgraded),
        state.ledger.add(a.group, a.installs, a.upgrade_cost, a.savings),
        MappingProxyType(by_t),
    )
    outcome = RealizedOutcome(n, a.installs, a.upgrades, a.savings, a.carbon, a.group, a.members)
    return new_state, outcome


def group_of(n: Neighborhood, state: TransitionState) -> IncomeGroup:
    return _static(n, state).group
