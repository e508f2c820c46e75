"""Budgeted neighborhood selection: the plain and the equity-capped planners."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .costs import HIGH_UTILIZATION_RATIO, OVERLOAD_RATIO, ConfigurationError, install_cost_for_usage, upgrade_action
from .entities import GROUPS, IncomeGroup
from .knapsack import knapsack_dp
from .neighborhoods import (
    Assessment,
    StaleNeighborhoodError,
    TransitionState,
    _static,
    apply_shutdown,
    assess,
    check_fresh,
    enumerate_neighborhoods,
)
from .network import edge_sort_key

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BudgetSpec:
    total: float
    granularity: float = 1_000.0
    equity: dict | None = None  # IncomeGroup -> currency cap

    def __post_init__(self):
        if not self.total >= 0:
            raise ValueError("budget total must be nonnegative")
        if not self.granularity > 0:
            raise ValueError("granularity must be positive")
        if self.equity is not None:
            eq = {IncomeGroup(g): float(v) for g, v in self.equity.items()}
            if any(v < 0 for v in eq.values()):
                raise ValueError("equity allocations must be nonnegative")
            if abs(sum(eq.values()) - self.total) > self.granularity:
                raise ValueError(
                    f"equity allocations sum to {sum(eq.values())}, budget is {self.total}"
                )
            object.__setattr__(self, "equity", eq)

    @classmethod
    def from_shares(cls, total: float, shares: dict, granularity: float = 1_000.0) -> "BudgetSpec":
        s = sum(shares.values())
        if any(v < 0 for v in shares.values()) or s <= 0:
            raise ValueError("equity shares must be nonnegative with a positive sum")
        return cls(total, granularity, {IncomeGroup(g): total * v / s for g, v in shares.items()})


@dataclass
class TransitionPlan:
    strategy: str
    budget: BudgetSpec
    steps: list
    final_state: TransitionState
    rounds: int = 0
    per_group_rounds: dict = field(default_factory=dict)

    @property
    def ledger(self):
        return self.final_state.ledger

    @property
    def carbon(self) -> float:
        total = 0.0
        for s in self.steps:
            total += s.carbon
        return total


def _order_key(a: Assessment):
    # descending utility, then larger carbon, then smallest pseudo-index
    return (-a.utility, -a.carbon, edge_sort_key(a.neighborhood.pseudo_index))


class _AssessmentCache:
    """Assessments reused across rounds until a touched transformer changes."""

    def __init__(self):
        self._by_edges = {}
        self._by_tid = {}

    def get(self, n, state) -> Assessment:
        hit = self._by_edges.get(n.edges)
        if hit is not None:
            return hit if hit.neighborhood == n else replace(hit, neighborhood=n)
        a = assess(n, state)
        self._by_edges[n.edges] = a
        for tid, _ in _static(n, state).by_transformer:
            self._by_tid.setdefault(tid, set()).add(n.edges)
        return a

    def invalidate(self, tids) -> None:
        for tid in tids:
            for edges in self._by_tid.pop(tid, ()):
                self._by_edges.pop(edges, None)


def _touched(outcome, scenario) -> set:
    return {scenario.households[h].transformer_id for h in outcome.households}


def _run_loop(state, limit: float, spend, granularity: float, group: IncomeGroup | None,
              steps: list, budget_total: float | None = None):
    """Select-and-convert rounds until nothing affordable remains.

    ``spend(state)`` is the realized spend checked against ``limit``; when
    ``group`` is set only that group's neighborhoods are candidates.
    """
    scenario = state.scenario
    cache = _AssessmentCache()
    rounds = 0

    def fits(new_state) -> bool:
        if spend(new_state) > limit:
            return False
        return budget_total is None or new_state.ledger.total <= budget_total

    while True:
        rounds += 1
        cands = []
        for n in enumerate_neighborhoods(state):
            a = cache.get(n, state)
            if group is None or a.group == group:
                cands.append(a)

        free = sorted((a for a in cands if a.cost <= 0), key=_order_key)
        applied_free = False
        for a in free:
            try:
                check_fresh(state, a.neighborhood)
            except StaleNeighborhoodError:
                continue
            now = assess(a.neighborhood, state)
            if now.cost > 0 or (group is not None and now.group != group):
                continue
            new_state, outcome = apply_shutdown(state, a.neighborhood)
            if not fits(new_state):
                continue
            state = new_state
            steps.append(outcome)
            cache.invalidate(_touched(outcome, scenario))
            applied_free = True
        if applied_free:
            continue

        remaining = limit - spend(state)
        if budget_total is not None:
            remaining = min(remaining, budget_total - state.ledger.total)
        cap_units = int(math.floor(remaining / granularity)) if remaining > 0 else 0
        items = []
        for a in cands:
            if a.cost > 0 and a.carbon > 0:
                w = int(math.ceil(a.cost / granularity))
                if w <= cap_units:
                    items.append((a, w))
        if not items:
            break
        chosen = knapsack_dp([a.carbon for a, _ in items], [w for _, w in items], cap_units)
        if not chosen:
            break
        picked = sorted((items[i][0] for i in chosen), key=_order_key)

        converted = 0
        for est in picked:
            try:
                check_fresh(state, est.neighborhood)
            except StaleNeighborhoodError:
                log.debug("stale pick %s, reselecting", est.neighborhood.pseudo_index)
                break
            now = assess(est.neighborhood, state)
            if now.cost > est.cost + granularity or (group is not None and now.group != group):
                break
            new_state, outcome = apply_shutdown(state, est.neighborhood)
            if not fits(new_state):
                break
            state = new_state
            steps.append(outcome)
            cache.invalidate(_touched(outcome, scenario))
            converted += 1
        if converted == 0:
            break
    return state, rounds


def solve_nhpt(scenario, budget: BudgetSpec, state: TransitionState | None = None) -> TransitionPlan:
    """Maximize avoided carbon within ``budget.total``."""
    if budget.equity is not None:
        raise ConfigurationError("solve_nhpt takes no equity vector; use solve_enhpt")
    state = state or TransitionState.initial(scenario)
    steps = []
    final, rounds = _run_loop(state, budget.total, lambda s: s.ledger.total, budget.granularity,
                              None, steps)
    return TransitionPlan("network-aware", budget, steps, final, rounds)


def solve_enhpt(scenario, budget: BudgetSpec, state: TransitionState | None = None) -> TransitionPlan:
    """Per-group capped selection; groups share the evolving network state."""
    if budget.equity is None:
        raise ConfigurationError("solve_enhpt needs an equity allocation")
    present = {h.income_group for h in scenario.gas_households()}
    missing = present - set(budget.equity)
    if missing:
        raise ConfigurationError(
            "no allocation for income group(s): " + ", ".join(sorted(g.value for g in missing))
        )
    state = state or TransitionState.initial(scenario)
    steps, rounds = [], {}
    for g in GROUPS:
        if g not in budget.equity:
            continue
        state, r = _run_loop(state, budget.equity[g], lambda s, g=g: s.ledger.group_total(g),
                             budget.granularity, g, steps)
        rounds[g] = r
    return TransitionPlan("equity-aware", budget, steps, state, sum(rounds.values()), rounds)


def full_conversion_upgrades(scenario) -> dict:
    """Upgrade action for every transformer overloaded once all its households convert."""
    book = scenario.book
    out = {}
    for tid in sorted(scenario.transformers):
        t = scenario.transformers[tid]
        peak = scenario.peak_load(tid, frozenset(t.served_households))
        if peak > OVERLOAD_RATIO * t.capacity_kva:
            out[tid] = upgrade_action(t.capacity_kva, peak, book)
    return out


def benchmark_budget(scenario) -> float:
    """Cost of converting every gas home plus the resulting grid upgrades."""
    k = scenario.constants
    total = 0.0
    for h in scenario.gas_households():
        total += install_cost_for_usage(h.annual_gas, k)
    for action in full_conversion_upgrades(scenario).values():
        total += action.cost
    return total


@dataclass(frozen=True)
class OverloadStats:
    pct_overloaded: float
    pct_highly_utilized: float
    pct_time_overloaded: dict

    @property
    def mean_pct_time_overloaded(self) -> float:
        vals = [self.pct_time_overloaded[t] for t in sorted(self.pct_time_overloaded)]
        return float(np.mean(vals)) if vals else 0.0


def overload_statistics(scenario, state: TransitionState | None = None, full_conversion: bool = False) -> OverloadStats:
    """Share of transformers overloaded / highly utilized, and hours spent overloaded.

    With ``full_conversion`` every served household runs a heat pump and
    original ratings apply; otherwise loads and ratings come from ``state``
    (the baseline when no state is given).
    """
    over = high = 0
    time_over = {}
    ids = sorted(scenario.transformers)
    for tid in ids:
        t = scenario.transformers[tid]
        if full_conversion:
            conv, cap = frozenset(t.served_households), t.capacity_kva
        elif state is not None:
            conv, cap = state.converted_by_transformer.get(tid, frozenset()), state.effective_capacity(tid)
        else:
            conv = frozenset(h for h in t.served_households if scenario.households[h].converted)
            cap = t.capacity_kva
        load = scenario.hourly_load(tid, conv)
        peak = float(load.max())
        if peak > OVERLOAD_RATIO * cap:
            over += 1
        elif peak > HIGH_UTILIZATION_RATIO * cap:
            high += 1
        time_over[tid] = 100.0 * float(np.count_nonzero(load > OVERLOAD_RATIO * cap)) / load.size
    n = len(ids)
    return OverloadStats(100.0 * over / n if n else 0.0, 100.0 * high / n if n else 0.0, time_over)
