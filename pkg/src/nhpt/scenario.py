"""Scenario container and its on-disk JSON format."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .costs import CostBook, PhysicalConstants, gas_to_heat, heat_to_electric
from .entities import Household, IncomeGroup, Transformer
from .network import GasNetwork, PipeEdge, edge_sort_key, weakly_connected_components
from .profiles import HOURS, Shape

FORMAT_VERSION = 1
COST_TABLE_FIELDS = (
    "pole_top_denominations",
    "pole_top_cost_range",
    "pad_mount_denominations",
    "pad_mount_cost_range",
)


class ScenarioFormatError(ValueError):
    """The file could not be parsed into a scenario."""


class ScenarioValidationError(ValueError):
    """The scenario parsed but breaks a structural invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Scenario:
    network: GasNetwork
    households: dict
    transformers: dict
    constants: PhysicalConstants
    book: CostBook = None
    provenance: str = ""
    _peaks: dict = field(default_factory=dict, compare=False, repr=False)
    _static: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.book is None:
            object.__setattr__(self, "book", CostBook(self.constants))
        elif self.book.constants != self.constants:
            object.__setattr__(self, "book", _rebook(self.book, self.constants))

    def with_constants(self, constants: PhysicalConstants) -> "Scenario":
        return Scenario(self.network, self.households, self.transformers, constants,
                        _rebook(self.book, constants), self.provenance)

    def gas_households(self) -> list:
        """Households still heating with gas, in id order."""
        return [self.households[h] for h in sorted(self.households) if not self.households[h].converted]

    def electric_adder(self, household_ids) -> np.ndarray:
        """Summed heat-pump load of ``household_ids``, grouped by shared shape."""
        k = self.constants
        by_shape, order = {}, []
        for hid in sorted(household_ids):
            h = self.households[hid]
            tok = h.gas_shape.token
            if tok not in by_shape:
                by_shape[tok] = [h.gas_shape, 0.0]
                order.append(tok)
            by_shape[tok][1] += h.annual_gas
        total = np.zeros(HOURS)
        for tok in order:
            shape, annual = by_shape[tok]
            total += annual * shape.values
        return heat_to_electric(gas_to_heat(total, k), k) / k.power_factor

    def peak_load(self, transformer_id, converted: frozenset) -> float:
        """Peak of baseline plus the heat-pump load of ``converted`` households."""
        key = (transformer_id, converted)
        hit = self._peaks.get(key)
        if hit is not None:
            return hit
        t = self.transformers[transformer_id]
        if converted:
            peak = float((t.baseline_hourly_load + self.electric_adder(converted)).max())
        else:
            peak = t.baseline_peak
        self._peaks[key] = peak
        return peak

    def hourly_load(self, transformer_id, converted) -> np.ndarray:
        t = self.transformers[transformer_id]
        if not converted:
            return t.baseline_hourly_load
        return t.baseline_hourly_load + self.electric_adder(converted)

    def total_carbon(self) -> float:
        k = self.constants
        return sum(h.annual_gas * k.co2_per_ccf for h in self.gas_households())

    def digest(self) -> str:
        return hashlib.sha256(dumps_scenario(self).encode()).hexdigest()


def _rebook(book: CostBook, constants: PhysicalConstants) -> CostBook:
    return CostBook(constants, book.pole_top_denominations, book.pole_top_cost_range,
                    book.pad_mount_denominations, book.pad_mount_cost_range)


def median_usage(households) -> float:
    vals = [h.annual_gas for h in households]
    return float(np.median(vals)) if vals else 0.0


def derive_maintenance(network: GasNetwork, rate: float) -> GasNetwork:
    """Stamp each edge with its annual maintenance at ``rate`` per metre of pipe."""
    from dataclasses import replace
    edges = {k: replace(e, annual_maintenance=e.pipe_length * rate) for k, e in network.edges.items()}
    return GasNetwork.unchecked(network.source, edges, network.nodes, network.positions)


# ---------------------------------------------------------------- violations

def find_violations(scenario: Scenario) -> list[str]:
    """Every structural invariant the scenario breaks, as readable lines."""
    out = []
    net = scenario.network
    comps = weakly_connected_components(net)
    if len(comps) != 1:
        out.append(f"network is disconnected: {len(comps)} weak components")
    if net.source not in net.nodes:
        out.append(f"source {net.source!r} is not a node")
    attached = {}
    for key in net.sorted_edge_keys():
        e = net.edges[key]
        for hid in e.attached_households:
            if hid not in scenario.households:
                out.append(f"edge {_fmt_key(key)} references missing household {hid!r}")
            elif hid in attached:
                out.append(f"household {hid!r} attached to edges {_fmt_key(attached[hid])} and {_fmt_key(key)}")
            else:
                attached[hid] = key
    for hid in sorted(scenario.households):
        h = scenario.households[hid]
        if h.transformer_id not in scenario.transformers:
            out.append(f"household {hid!r} references missing transformer {h.transformer_id!r}")
        if h.converted and hid in attached:
            out.append(f"household {hid!r} is converted but still attached to a live pipe")
        if not h.converted and hid not in attached:
            out.append(f"household {hid!r} uses gas but is not attached to any pipe")
        total = float(h.hourly_gas.sum())
        if abs(total - h.annual_gas) > 1e-6 * max(1.0, h.annual_gas):
            out.append(f"household {hid!r}: hourly usage sums to {total}, annual is {h.annual_gas}")
    for tid in sorted(scenario.transformers):
        t = scenario.transformers[tid]
        for hid in t.served_households:
            if hid not in scenario.households:
                out.append(f"transformer {tid!r} serves missing household {hid!r}")
            elif scenario.households[hid].transformer_id != tid:
                out.append(f"transformer {tid!r} lists household {hid!r} served by another transformer")
    for hid in sorted(scenario.households):
        h = scenario.households[hid]
        t = scenario.transformers.get(h.transformer_id)
        if t is not None and hid not in t.served_households:
            out.append(f"household {hid!r} missing from served list of {h.transformer_id!r}")
    out.extend(scenario.constants.validate())
    return out


def _fmt_key(key) -> str:
    return f"{key[0]}->{key[1]}#{key[2]}"


# ---------------------------------------------------------------- writing

def _fmt_series(arr) -> str:
    return ",".join(repr(float(x)) for x in arr)


def _shape_fields(shape: Shape, series_key: str) -> dict:
    if shape.name is not None:
        return {"shape": shape.name, "variant": shape.variant}
    return {series_key: _fmt_series(shape.explicit)}


def scenario_to_document(s: Scenario) -> dict:
    net = s.network
    nodes = []
    for n in sorted(net.nodes, key=lambda x: (type(x).__name__, x)):
        x, y = net.positions.get(n, (0.0, 0.0))
        nodes.append({"id": n, "x": float(x), "y": float(y)})
    edges = []
    for key in net.sorted_edge_keys():
        e = net.edges[key]
        edges.append({
            "tail": e.tail, "head": e.head, "index": e.index, "length": e.length,
            "households": list(e.attached_households),
            "service_lengths": list(e.service_lengths),
            "annual_maintenance": e.annual_maintenance,
        })
    households = []
    for hid in sorted(s.households):
        h = s.households[hid]
        row = {"id": h.id, "x": float(h.location[0]), "y": float(h.location[1]), "annual": h.annual_gas}
        row.update(_shape_fields(h.gas_shape, "profile"))
        row.update({"transformer": h.transformer_id, "income_group": h.income_group.value,
                    "converted": h.converted})
        households.append(row)
    transformers = []
    for tid in sorted(s.transformers):
        t = s.transformers[tid]
        row = {"id": t.id, "capacity_kva": t.capacity_kva}
        row.update(_shape_fields(t.baseline_shape, "hourly"))
        row["scale"] = t.baseline_scale
        row["served"] = list(t.served_households)
        transformers.append(row)
    constants = {f.name: getattr(s.constants, f.name) for f in fields(s.constants)}
    for name in COST_TABLE_FIELDS:
        constants[name] = list(getattr(s.book, name))
    return {
        "format_version": FORMAT_VERSION,
        "provenance": s.provenance,
        "source": net.source,
        "constants": constants,
        "nodes": nodes,
        "edges": edges,
        "households": households,
        "transformers": transformers,
    }


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_document(s), indent=1, sort_keys=False) + "\n"


def write_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(scenario))


# ---------------------------------------------------------------- reading

def _req(row, name, where, kind=None):
    if name not in row:
        raise ScenarioFormatError(f"{where}: missing field '{name}'")
    v = row[name]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ScenarioFormatError(f"{where}.{name}: expected a finite number, got {v!r}")
        return float(v)
    if kind is not None and not isinstance(v, kind):
        raise ScenarioFormatError(f"{where}.{name}: expected {kind.__name__}, got {v!r}")
    return v


def _parse_series(text, where) -> np.ndarray:
    try:
        arr = np.array([float(x) for x in str(text).split(",")])
    except ValueError as exc:
        raise ScenarioFormatError(f"{where}: bad number in series ({exc})") from None
    if arr.shape != (HOURS,):
        raise ScenarioFormatError(f"{where}: series has {arr.size} values, expected {HOURS}")
    if not np.isfinite(arr).all():
        raise ScenarioFormatError(f"{where}: series contains non-finite values")
    return arr


def _parse_shape(row, series_key, where) -> Shape:
    if "shape" in row:
        try:
            return Shape(name=row["shape"], variant=int(row.get("variant", 0)))
        except ValueError as exc:
            raise ScenarioFormatError(f"{where}.shape: {exc}") from None
    if series_key in row:
        return Shape(explicit=_parse_series(row[series_key], f"{where}.{series_key}"))
    raise ScenarioFormatError(f"{where}: needs 'shape' or '{series_key}'")


def scenario_from_document(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("top level: expected an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ScenarioFormatError(f"format_version: unsupported value {version!r}")
    for section in ("nodes", "edges", "households", "transformers", "constants"):
        if section not in doc:
            raise ScenarioFormatError(f"missing section '{section}'")

    raw_consts = dict(doc["constants"])
    tables = {}
    for name in COST_TABLE_FIELDS:
        if name in raw_consts:
            tables[name] = tuple(float(x) for x in raw_consts.pop(name))
    known = {f.name for f in fields(PhysicalConstants)}
    for name in raw_consts:
        if name not in known:
            raise ScenarioFormatError(f"constants.{name}: unknown constant")
        _req(raw_consts, name, "constants", float)
    constants = PhysicalConstants(**{k: float(v) for k, v in raw_consts.items()})
    try:
        book = CostBook(constants, **tables)
    except ValueError as exc:
        raise ScenarioFormatError(f"constants: {exc}") from None

    positions = {}
    for i, row in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        nid = _req(row, "id", where)
        positions[nid] = (_req(row, "x", where, float), _req(row, "y", where, float))

    edges = {}
    for i, row in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        length = _req(row, "length", where, float)
        if length <= 0:
            raise ScenarioFormatError(f"{where}.length: must be positive, got {length}")
        services = tuple(float(x) for x in row.get("service_lengths", []))
        if any(s < 0 for s in services):
            raise ScenarioFormatError(f"{where}.service_lengths: negative value")
        try:
            e = PipeEdge(_req(row, "tail", where), _req(row, "head", where), length,
                         int(row.get("index", 0)), tuple(row.get("households", [])), services,
                         float(row.get("annual_maintenance", 0.0)))
        except ValueError as exc:
            raise ScenarioFormatError(f"{where}: {exc}") from None
        if e.key in edges:
            raise ScenarioFormatError(f"{where}: duplicate edge key {e.key}")
        edges[e.key] = e

    source = doc.get("source")
    nodes = set(positions)
    network = GasNetwork.unchecked(source, edges, nodes | {n for k in edges for n in k[:2]}, positions)

    households = {}
    for i, row in enumerate(doc["households"]):
        where = f"households[{i}]"
        annual = _req(row, "annual", where, float)
        if annual < 0:
            raise ScenarioFormatError(f"{where}.annual: negative usage")
        try:
            group = IncomeGroup.parse(str(_req(row, "income_group", where)))
        except ValueError:
            raise ScenarioFormatError(f"{where}.income_group: unknown group {row['income_group']!r}") from None
        hid = _req(row, "id", where)
        if hid in households:
            raise ScenarioFormatError(f"{where}.id: duplicate household {hid!r}")
        households[hid] = Household(
            hid, (_req(row, "x", where, float), _req(row, "y", where, float)), annual,
            _parse_shape(row, "profile", where), _req(row, "transformer", where), group,
            bool(row.get("converted", False)),
        )

    transformers = {}
    for i, row in enumerate(doc["transformers"]):
        where = f"transformers[{i}]"
        cap = _req(row, "capacity_kva", where, float)
        if cap <= 0:
            raise ScenarioFormatError(f"{where}.capacity_kva: must be positive")
        tid = _req(row, "id", where)
        if tid in transformers:
            raise ScenarioFormatError(f"{where}.id: duplicate transformer {tid!r}")
        transformers[tid] = Transformer(tid, cap, _parse_shape(row, "hourly", where),
                                        float(row.get("scale", 1.0)), tuple(row.get("served", [])))

    return Scenario(network, households, transformers, constants, book, str(doc.get("provenance", "")))


def loads_scenario(text: str, validate: bool = True) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    scenario = scenario_from_document(doc)
    if validate:
        problems = find_violations(scenario)
        if problems:
            raise ScenarioValidationError(problems)
    return scenario


def read_scenario(path, validate: bool = True) -> Scenario:
    return loads_scenario(Path(path).read_text(), validate=validate)
