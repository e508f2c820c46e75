from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .profiles import Shape


class IncomeGroup(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return _RANK[self]

    @classmethod
    def parse(cls, text: str) -> "IncomeGroup":
        t = text.strip().lower()
        aliases = {"med": "medium", "mid": "medium", "middle": "medium"}
        return cls(aliases.get(t, t))


_RANK = {IncomeGroup.LOW: 0, IncomeGroup.MEDIUM: 1, IncomeGroup.HIGH: 2}
GROUPS = (IncomeGroup.LOW, IncomeGroup.MEDIUM, IncomeGroup.HIGH)


def income_group_for(median_income: float, low_cutoff: float = 45_000, high_cutoff: float = 80_000) -> IncomeGroup:
    """Classify a tract by median household income."""
    if median_income < low_cutoff:
        return IncomeGroup.LOW
    if median_income > high_cutoff:
        return IncomeGroup.HIGH
    return IncomeGroup.MEDIUM


@dataclass(frozen=True, eq=False)
class Household:
    """One gas meter. Hourly usage is ``annual_gas`` spread by ``gas_shape`` (sums to 1)."""

    id: str
    location: tuple
    annual_gas: float
    gas_shape: Shape
    transformer_id: str
    income_group: IncomeGroup
    converted: bool = False

    def __post_init__(self):
        if not self.annual_gas >= 0:
            raise ValueError(f"household {self.id}: negative annual usage")

    @classmethod
    def from_hourly(cls, id, location, hourly, transformer_id, income_group, converted=False):
        hourly = np.asarray(hourly, dtype=float)
        if (hourly < 0).any():
            raise ValueError(f"household {id}: negative hourly usage")
        annual = float(hourly.sum())
        profile = hourly / annual if annual > 0 else np.zeros_like(hourly)
        return cls(id, tuple(location), annual, Shape(explicit=profile), transformer_id,
                   IncomeGroup(income_group), converted)

    @property
    def hourly_gas(self) -> np.ndarray:
        return self.annual_gas * self.gas_shape.values

    def __eq__(self, other):
        if not isinstance(other, Household):
            return NotImplemented
        return (
            self.id == other.id
            and tuple(self.location) == tuple(other.location)
            and self.annual_gas == other.annual_gas
            and self.gas_shape == other.gas_shape
            and self.transformer_id == other.transformer_id
            and self.income_group == other.income_group
            and self.converted == other.converted
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Transformer:
    """Distribution transformer; baseline load is ``baseline_scale * baseline_shape``."""

    id: str
    capacity_kva: float
    baseline_shape: Shape
    baseline_scale: float = 1.0
    served_households: tuple = field(default=())

    def __post_init__(self):
        if not self.capacity_kva > 0:
            raise ValueError(f"transformer {self.id}: capacity must be positive")
        if self.baseline_scale < 0:
            raise ValueError(f"transformer {self.id}: negative baseline scale")

    @cached_property
    def baseline_hourly_load(self) -> np.ndarray:
        load = self.baseline_scale * self.baseline_shape.values
        load.setflags(write=False)
        return load

    @cached_property
    def baseline_peak(self) -> float:
        return float(self.baseline_hourly_load.max())

    def __eq__(self, other):
        if not isinstance(other, Transformer):
            return NotImplemented
        return (
            self.id == other.id
            and self.capacity_kva == other.capacity_kva
            and self.baseline_shape == other.baseline_shape
            and self.baseline_scale == other.baseline_scale
            and tuple(self.served_households) == tuple(other.served_households)
        )

    __hash__ = None
