"""Network-oblivious comparison strategy.

Converts individual households in descending order of emissions while the
realized cost (install plus any upgrade it triggers) still fits the budget.
It never credits maintenance savings when choosing, and never plans around
shared transformers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .costs import OVERLOAD_RATIO, install_cost_for_usage, upgrade_action
from .network import cut_sets, edge_sort_key


@dataclass(frozen=True)
class ObliviousResult:
    converted_households: frozenset
    upgraded_transformers: dict
    shutdown_edges: frozenset
    installs: float
    upgrades: float
    carbon: float
    by_group: dict  # IncomeGroup -> spend

    @property
    def total(self) -> float:
        return self.installs + self.upgrades


def solve_oblivious(scenario, budget: float) -> ObliviousResult:
    k = scenario.constants
    book = scenario.book
    order = sorted(scenario.gas_households(), key=lambda h: (-h.annual_gas, h.id))
    converted = set(h for h, hh in scenario.households.items() if hh.converted)
    by_t = {}
    for hid in converted:
        by_t.setdefault(scenario.households[hid].transformer_id, set()).add(hid)
    upgraded = {}
    installs = upgrades = carbon = 0.0
    by_group = {}
    for h in order:
        install = install_cost_for_usage(h.annual_gas, k)
        tid = h.transformer_id
        action = None
        if tid not in upgraded:
            cap = scenario.transformers[tid].capacity_kva
            pre = scenario.peak_load(tid, frozenset(by_t.get(tid, ())))
            if pre <= OVERLOAD_RATIO * cap:
                post = scenario.peak_load(tid, frozenset(by_t.get(tid, set()) | {h.id}))
                if post > OVERLOAD_RATIO * cap:
                    action = upgrade_action(cap, post, book)
        cost = install + (action.cost if action else 0.0)
        if installs + upgrades + cost > budget:
            continue
        installs += install
        if action:
            upgrades += action.cost
            upgraded[tid] = action
        carbon += h.annual_gas * k.co2_per_ccf
        converted.add(h.id)
        by_t.setdefault(tid, set()).add(h.id)
        by_group[h.income_group] = by_group.get(h.income_group, 0.0) + cost
    return ObliviousResult(frozenset(converted), upgraded, _shut_edges(scenario, converted),
                           installs, upgrades, carbon, by_group)


def _shut_edges(scenario, converted) -> frozenset:
    """Edges whose whole neighborhood has only converted households (at least one)."""
    net = scenario.network
    shut = set()
    for key, edges in sorted(cut_sets(net).items(), key=lambda kv: edge_sort_key(kv[0])):
        members = [h for e in edges for h in net.edges[e].attached_households]
        if members and all(h in converted for h in members):
            shut |= edges
    return frozenset(shut)
