"""Summary metrics, plan files, replay and the delimited report tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields

from .costs import PhysicalConstants
from .entities import GROUPS, IncomeGroup
from .neighborhoods import TransitionState, apply_shutdown, current_neighborhood
from .network import edge_sort_key
from .planner import BudgetSpec, overload_statistics

PLAN_FORMAT_VERSION = 1


class PlanFormatError(ValueError):
    """A plan file that cannot be read."""


class ReplayMismatch(ValueError):
    """Re-applying a plan did not reproduce what the plan file records."""


@dataclass(frozen=True)
class SummaryMetrics:
    """Headline outcomes, all percentages against pre-transition totals."""

    carbon_reduction_pct: float
    households_converted_pct: float
    pipeline_shutdown_pct: float
    transformers_upgraded_pct: float
    budget: float
    budget_used: float
    budget_used_pct: float
    carbon_avoided: float
    carbon_total: float
    households_converted: int
    households_total: int
    pipe_shutdown_length: float
    pipe_total_length: float
    transformers_upgraded: int
    transformers_total: int
    installs: float
    upgrades: float
    savings: float
    group_spend: dict
    group_share_pct: dict
    group_households: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("group_spend", "group_share_pct", "group_households"):
            d[name] = {g.value: getattr(self, name)[g] for g in GROUPS}
        return d

    @classmethod
    def from_dict(cls, d) -> "SummaryMetrics":
        d = dict(d)
        for name in ("group_spend", "group_share_pct", "group_households"):
            d[name] = {IncomeGroup(g): v for g, v in d[name].items()}
        return cls(**d)

    def rows(self) -> list:
        """(metric, value) pairs, groups flattened."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, dict):
                out.extend((f"{f.name}.{g.value}", v[g]) for g in GROUPS)
            else:
                out.append((f.name, v))
        return out


def _pct(part, whole) -> float:
    return 100.0 * part / whole if whole > 0 else 0.0


def _metrics(scenario, budget: float, carbon: float, converted, shut_edges, upgraded: int,
             installs: float, upgrades: float, savings: float, group_spend: dict) -> SummaryMetrics:
    gas = scenario.gas_households()
    net = scenario.network
    carbon_total = scenario.total_carbon()
    pipe_total = net.total_pipe_length()
    shut = 0.0
    for k in sorted(shut_edges, key=edge_sort_key):
        shut += net.edges[k].pipe_length
    spend = {g: float(group_spend.get(g, 0.0)) for g in GROUPS}
    # negative (self-funding) groups never push the others' shares past 100
    positive = sum(max(v, 0.0) for v in spend.values())
    denom = max(budget, positive)
    shares = {g: _pct(max(spend[g], 0.0), denom) for g in GROUPS}
    counts = {g: 0 for g in GROUPS}
    for hid in sorted(converted):
        counts[scenario.households[hid].income_group] += 1
    used = installs + upgrades - savings
    return SummaryMetrics(
        carbon_reduction_pct=_pct(carbon, carbon_total),
        households_converted_pct=_pct(len(converted), len(gas)),
        pipeline_shutdown_pct=_pct(shut, pipe_total),
        transformers_upgraded_pct=_pct(upgraded, len(scenario.transformers)),
        budget=float(budget),
        budget_used=used,
        budget_used_pct=min(100.0, _pct(max(used, 0.0), budget)),
        carbon_avoided=carbon,
        carbon_total=carbon_total,
        households_converted=len(converted),
        households_total=len(gas),
        pipe_shutdown_length=shut,
        pipe_total_length=pipe_total,
        transformers_upgraded=upgraded,
        transformers_total=len(scenario.transformers),
        installs=installs,
        upgrades=upgrades,
        savings=savings,
        group_spend=spend,
        group_share_pct=shares,
        group_households=counts,
    )


def summarize_state(scenario, state: TransitionState, budget: float, steps) -> SummaryMetrics:
    carbon = 0.0
    for s in steps:
        carbon += s.carbon
    ledger = state.ledger
    spend = {g: ledger.group_total(g) for g in GROUPS}
    start = TransitionState.initial(scenario).converted_households
    return _metrics(scenario, budget, carbon, state.converted_households - start,
                    state.decommissioned_edges, len(state.upgraded_transformers),
                    ledger.installs, ledger.upgrades, ledger.savings, spend)


def summarize_plan(plan) -> SummaryMetrics:
    return summarize_state(plan.final_state.scenario, plan.final_state, plan.budget.total, plan.steps)


def summarize_oblivious(scenario, result, budget: float) -> SummaryMetrics:
    start = {h for h, hh in scenario.households.items() if hh.converted}
    return _metrics(scenario, budget, result.carbon, result.converted_households - start,
                    result.shutdown_edges, len(result.upgraded_transformers),
                    result.installs, result.upgrades, 0.0, result.by_group)


# ---------------------------------------------------------------- plan files

def _key_to_list(key) -> list:
    return [key[0], key[1], key[2]]


def _step_to_dict(outcome) -> dict:
    n = outcome.neighborhood
    return {
        "pseudo_index": _key_to_list(n.pseudo_index),
        "edges": [_key_to_list(k) for k in n.sorted_edges()],
        "households": list(outcome.households),
        "group": outcome.group.value,
        "installs": outcome.installs,
        "upgrades": [{"transformer": tid, **action.to_dict()} for tid, action in outcome.upgrades],
        "savings": outcome.savings,
        "carbon": outcome.carbon,
    }


def plan_to_document(plan, scenario_digest: str, benchmark: float | None = None) -> dict:
    b = plan.budget
    constants = plan.final_state.scenario.constants
    return {
        "format_version": PLAN_FORMAT_VERSION,
        "strategy": plan.strategy,
        "scenario_digest": scenario_digest,
        "constants": {f.name: getattr(constants, f.name) for f in fields(constants)},
        "benchmark_budget": benchmark,
        "budget": {
            "total": b.total,
            "granularity": b.granularity,
            "equity": None if b.equity is None else {g.value: b.equity[g] for g in GROUPS if g in b.equity},
        },
        "rounds": plan.rounds,
        "steps": [_step_to_dict(s) for s in plan.steps],
        "metrics": summarize_plan(plan).to_dict(),
    }


def dumps_plan(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"


def loads_plan(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanFormatError(f"plan is not valid JSON (line {exc.lineno}, column {exc.colno})") from None
    if not isinstance(doc, dict):
        raise PlanFormatError("plan must be a JSON object")
    if doc.get("format_version") != PLAN_FORMAT_VERSION:
        raise PlanFormatError(f"unsupported plan format_version {doc.get('format_version')!r}")
    for name in ("strategy", "scenario_digest", "constants", "budget", "steps", "metrics"):
        if name not in doc:
            raise PlanFormatError(f"plan is missing field {name!r}")
    return doc


def plan_budget(doc: dict) -> BudgetSpec:
    b = doc["budget"]
    try:
        return BudgetSpec(b["total"], b["granularity"], b.get("equity"))
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanFormatError(f"bad budget block: {exc}") from None


def plan_constants(doc: dict) -> PhysicalConstants:
    try:
        return PhysicalConstants(**{k: float(v) for k, v in doc["constants"].items()})
    except (TypeError, ValueError) as exc:
        raise PlanFormatError(f"bad constants block: {exc}") from None


def _as_key(raw, where) -> tuple:
    try:
        tail, head, index = raw
        return (tail, head, int(index))
    except (TypeError, ValueError):
        raise PlanFormatError(f"{where}: edge key must be [tail, head, index]") from None


def replay(scenario, doc: dict):
    """Re-apply the plan's steps to ``scenario``; returns ``(state, steps, metrics)``.

    ``scenario`` should already carry the plan's constants. Every recorded
    step must reproduce its neighborhood, households and money exactly, and
    the recomputed metrics must equal the stored ones.
    """
    if scenario.digest() != doc["scenario_digest"]:
        raise ReplayMismatch("scenario does not match the one the plan was made for")
    state = TransitionState.initial(scenario)
    outcomes = []
    for i, raw in enumerate(doc["steps"]):
        where = f"step {i}"
        try:
            key = _as_key(raw["pseudo_index"], where)
            edges = frozenset(_as_key(e, where) for e in raw["edges"])
        except (KeyError, TypeError) as exc:
            raise PlanFormatError(f"{where}: malformed ({exc})") from None
        n = current_neighborhood(state, key)
        if n is None or n.edges != edges:
            raise ReplayMismatch(f"{where}: neighborhood {key} is not live with the recorded edges")
        state, outcome = apply_shutdown(state, n)
        got = _step_to_dict(outcome)
        for name in ("households", "group", "installs", "upgrades", "savings", "carbon"):
            if got[name] != raw.get(name):
                raise ReplayMismatch(f"{where}: {name} differs from the plan file")
        outcomes.append(outcome)
    budget = plan_budget(doc)
    metrics = summarize_state(scenario, state, budget.total, outcomes)
    if metrics.to_dict() != doc["metrics"]:
        diff = sorted(k for k, v in metrics.to_dict().items() if doc["metrics"].get(k) != v)
        raise ReplayMismatch("recomputed metrics differ: " + ", ".join(diff))
    return state, outcomes, metrics


# ---------------------------------------------------------------- tables

def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def metrics_csv(metrics: SummaryMetrics) -> str:
    return to_csv(["metric", "value"], metrics.rows())


def comparison_csv(columns: dict) -> str:
    """One row per metric, one column per named ``SummaryMetrics``."""
    names = list(columns)
    table = {name: dict(m.rows()) for name, m in columns.items()}
    keys = [k for k, _ in columns[names[0]].rows()]
    return to_csv(["metric", *names], ([k, *(table[n][k] for n in names)] for k in keys))


def steps_csv(outcomes) -> str:
    rows, running = [], 0.0
    for i, o in enumerate(outcomes):
        running += o.cost
        n = o.neighborhood
        rows.append([
            i, f"{n.pseudo_index[0]}->{n.pseudo_index[1]}#{n.pseudo_index[2]}", len(n.edges),
            len(o.households), o.group.value, o.installs, o.upgrade_cost, o.savings, o.cost,
            o.carbon, ";".join(tid for tid, _ in o.upgrades), running,
        ])
    return to_csv(["step", "pseudo_index", "edges", "households", "group", "installs", "upgrades",
                   "savings", "cost", "carbon", "upgraded_transformers", "cumulative_cost"], rows)


def overload_csv(scenario, state) -> str:
    rows = []
    for label, stats in (
        ("before", overload_statistics(scenario)),
        ("after", overload_statistics(scenario, state)),
        ("full_conversion", overload_statistics(scenario, full_conversion=True)),
    ):
        rows.append([label, stats.pct_overloaded, stats.pct_highly_utilized, stats.mean_pct_time_overloaded])
    return to_csv(["state", "pct_overloaded", "pct_highly_utilized", "mean_pct_time_overloaded"], rows)


def format_table(columns: dict, keys=None) -> str:
    """Fixed-width text rendering of a metric comparison."""
    names = list(columns)
    table = {name: dict(m.rows()) for name, m in columns.items()}
    keys = keys or [k for k, _ in columns[names[0]].rows()]
    width = max(len(k) for k in keys)
    lines = [f"{'metric':<{width}}  " + "  ".join(f"{n:>14}" for n in names)]
    for k in keys:
        cells = []
        for n in names:
            v = table[n][k]
            cells.append(f"{v:>14.4f}" if isinstance(v, float) else f"{v!s:>14}")
        lines.append(f"{k:<{width}}  " + "  ".join(cells))
    return "\n".join(lines)
