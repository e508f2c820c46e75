"""Physical conversions, carbon accounting and the cost models.

Every map from usage to heat, electricity, carbon, install cost or
maintenance savings is linear, so each accepts scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum

import numpy as np

OVERLOAD_RATIO = 1.25
HIGH_UTILIZATION_RATIO = 0.90


class ConfigurationError(ValueError):
    """Constants or cost tables that make a model undefined."""


@dataclass(frozen=True)
class PhysicalConstants:
    co2_per_ccf: float = 0.00551
    furnace_efficiency: float = 0.875
    cop: float = 2.5
    btu_per_ccf: float = 103_700.0
    kwh_per_btu: float = 0.000293071
    power_factor: float = 1.0
    median_annual_gas: float = 0.0
    ashp_median_cost: float = 15_000.0
    maintenance_rate: float = 25.0
    maintenance_multiplier: float = 1.0

    def validate(self) -> list[str]:
        problems = []
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                problems.append(f"constant {f.name} must be a positive number, got {v!r}")
        if self.furnace_efficiency > 1:
            problems.append("constant furnace_efficiency must be <= 1")
        if self.power_factor > 1:
            problems.append("constant power_factor must be <= 1")
        return problems

    def with_overrides(self, **overrides) -> "PhysicalConstants":
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise ConfigurationError(f"unknown constant(s): {', '.join(sorted(bad))}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


def gas_to_heat(gas, k: PhysicalConstants):
    """CCF of gas to useful heat in BTU, after furnace losses."""
    return gas * k.btu_per_ccf * k.furnace_efficiency


def heat_to_electric(heat, k: PhysicalConstants):
    """BTU of heat to the kWh a heat pump draws to deliver it."""
    return (heat / k.cop) * k.kwh_per_btu


def ashp_electric_adder(household, k: PhysicalConstants) -> np.ndarray:
    """Hourly extra transformer load (kVA) once ``household`` runs a heat pump."""
    return heat_to_electric(gas_to_heat(household.hourly_gas, k), k) / k.power_factor


def carbon_emissions(gas, k: PhysicalConstants):
    """Tonnes of CO2 from burning ``gas`` CCF."""
    return gas * k.co2_per_ccf


def ashp_install_cost(household, k: PhysicalConstants) -> float:
    """Install cost scaled linearly from the median-usage reference system."""
    return install_cost_for_usage(household.annual_gas, k)


def install_cost_for_usage(annual_gas, k: PhysicalConstants):
    if not k.median_annual_gas > 0:
        raise ConfigurationError("median_annual_gas must be positive to price heat pumps")
    return k.ashp_median_cost * (annual_gas / k.median_annual_gas)


def maintenance_savings(edges, k: PhysicalConstants) -> float:
    """One year of avoided maintenance on the given pipes, services included."""
    total = 0.0
    for e in edges:
        total += e.pipe_length
    return k.maintenance_multiplier * k.maintenance_rate * total


def length_savings(pipe_length, k: PhysicalConstants):
    return k.maintenance_multiplier * k.maintenance_rate * pipe_length


class UpgradeKind(str, Enum):
    UPGRADE_POLE_TOP = "UpgradePoleTop"
    ADDITIONAL_POLE_TOP = "AdditionalPoleTop"
    REPLACE_WITH_PAD_MOUNT = "ReplaceWithPadMount"
    ADDITIONAL_PAD_MOUNT = "AdditionalPadMount"
    NO_ACTION = "NoAction"


@dataclass(frozen=True)
class UpgradeAction:
    kind: UpgradeKind
    purchased_units: tuple = ()
    cost: float = 0.0
    capacity_after: float = 0.0
    rule: int = 0
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "purchased_units": list(self.purchased_units),
            "cost": self.cost,
            "capacity_after": self.capacity_after,
            "rule": self.rule,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, d) -> "UpgradeAction":
        return cls(UpgradeKind(d["kind"]), tuple(d["purchased_units"]), d["cost"],
                   d["capacity_after"], d["rule"], d["fallback"])


NO_ACTION_COST = 0.0


@dataclass(frozen=True)
class CostBook:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    pole_top_denominations: tuple = (15.0, 25.0, 37.5, 50.0, 75.0)
    pole_top_cost_range: tuple = (4_225.0, 25_525.0)
    pad_mount_denominations: tuple = (75.0, 100.0, 150.0, 167.0)
    pad_mount_cost_range: tuple = (74_900.0, 149_800.0)

    def __post_init__(self):
        for name in ("pole_top", "pad_mount"):
            denoms = getattr(self, f"{name}_denominations")
            lo, hi = getattr(self, f"{name}_cost_range")
            if list(denoms) != sorted(denoms) or not denoms:
                raise ConfigurationError(f"{name} denominations must be sorted ascending")
            if not 0 <= lo <= hi:
                raise ConfigurationError(f"{name} cost range must be ordered and nonnegative")

    @property
    def pole_top_limit(self) -> float:
        return self.pole_top_denominations[-1]

    def unit_cost(self, family: str, kva: float) -> float:
        denoms = getattr(self, f"{family}_denominations")
        lo, hi = getattr(self, f"{family}_cost_range")
        return float(np.interp(kva, [denoms[0], denoms[-1]], [lo, hi]))


def _units_for(need: float, denoms) -> list:
    """Largest unit repeated while it cannot cover the remainder, then the smallest that does."""
    units = []
    biggest = denoms[-1]
    while need > biggest:
        units.append(biggest)
        need -= biggest
    units.append(next(d for d in denoms if d >= need))
    return units


def upgrade_action(capacity: float, new_peak: float, book: CostBook) -> UpgradeAction:
    """Pick the grid upgrade for a transformer whose peak moves to ``new_peak``.

    The four upgrade rules are tried in order and the first match wins. The
    region no rule covers (peak between 1.25x and 2x capacity, above the
    pole-top limit, on a pole-top unit) falls back to an extra pole-top unit
    and is flagged.
    """
    if new_peak <= OVERLOAD_RATIO * capacity:
        return UpgradeAction(UpgradeKind.NO_ACTION, (), NO_ACTION_COST, capacity, 0)
    limit = book.pole_top_limit
    pole, pad = book.pole_top_denominations, book.pad_mount_denominations

    if new_peak < 2 * capacity and new_peak <= limit:
        units, kind, rule, family = [next(d for d in pole if d >= new_peak)], UpgradeKind.UPGRADE_POLE_TOP, 1, "pole_top"
        after = units[0]
    elif new_peak > 2 * capacity and capacity <= limit:
        units, kind, rule, family = _units_for(new_peak - capacity, pole), UpgradeKind.ADDITIONAL_POLE_TOP, 2, "pole_top"
        after = capacity + sum(units)
    elif new_peak > 3 * capacity and new_peak > limit:
        units, kind, rule, family = _units_for(new_peak, pad), UpgradeKind.REPLACE_WITH_PAD_MOUNT, 3, "pad_mount"
        after = sum(units)
    elif capacity > limit:
        units, kind, rule, family = _units_for(new_peak - capacity, pad), UpgradeKind.ADDITIONAL_PAD_MOUNT, 4, "pad_mount"
        after = capacity + sum(units)
    else:
        units = _units_for(new_peak - capacity, pole)
        cost = sum(book.unit_cost("pole_top", u) for u in units)
        return UpgradeAction(UpgradeKind.ADDITIONAL_POLE_TOP, tuple(units), cost,
                             capacity + sum(units), 2, fallback=True)
    cost = sum(book.unit_cost(family, u) for u in units)
    return UpgradeAction(kind, tuple(units), cost, after, rule)


def neighborhood_cost(n, state, book: CostBook | None = None) -> float:
    """Installs plus newly triggered upgrades minus one year of maintenance savings."""
    from .neighborhoods import assess, check_fresh

    check_fresh(state, n)
    return assess(n, state, book).cost


def neighborhood_carbon(n, state, k: PhysicalConstants | None = None) -> float:
    """Carbon avoided by converting the neighborhood's remaining gas households."""
    k = k or state.scenario.constants
    net = state.scenario.network
    households = state.scenario.households
    members = sorted(h for key in n.edges for h in net.edges[key].attached_households)
    total = 0.0
    for hid in members:
        if hid not in state.converted_households:
            total += carbon_emissions(households[hid].annual_gas, k)
    return total


def utility(n, state, book: CostBook | None = None) -> float:
    """Carbon per unit cost; infinite when the neighborhood pays for itself."""
    cost = neighborhood_cost(n, state, book)
    carbon = neighborhood_carbon(n, state, book.constants if book else None)
    if cost <= 0:
        return math.inf
    return carbon / cost
