"""Hourly load shapes for one non-leap year (8760 slots).

A shape is either a named parametric curve (stored in scenario files by name
and expanded on load) or an explicit series.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HOURS = 8760


@lru_cache(maxsize=None)
def winter_peaked(variant: int = 0) -> np.ndarray:
    """Space-heating gas shape, normalized to sum to 1.

    Seasonal heating term peaks in mid-January, a small flat term stands in
    for hot water, and morning/evening thermostat bumps ride on top. The
    variant shifts the daily bumps by ``variant`` hours.
    """
    t = np.arange(HOURS)
    day = t / 24.0
    hour = (t - variant) % 24
    seasonal = np.clip(np.cos(2 * np.pi * (day - 15.0) / 365.0), 0.0, None) ** 1.3
    daily = 1.0 + 0.6 * np.exp(-0.5 * ((hour - 7) / 1.5) ** 2) + 0.5 * np.exp(-0.5 * ((hour - 19) / 2.0) ** 2)
    night = np.where((hour < 5) | (hour > 22), 0.8, 1.0)
    shape = (0.12 + seasonal) * daily * night
    shape = shape / shape.sum()
    shape.setflags(write=False)
    return shape


@lru_cache(maxsize=None)
def residential_electric(variant: int = 0) -> np.ndarray:
    """Feeder-level residential electric shape, normalized to peak 1.

    Summer cooling and winter lighting/heating lobes with an evening peak.
    """
    t = np.arange(HOURS)
    day = t / 24.0
    hour = (t - variant) % 24
    summer = 0.35 * np.clip(np.cos(2 * np.pi * (day - 200.0) / 365.0), 0.0, None) ** 2
    winter = 0.2 * np.clip(np.cos(2 * np.pi * (day - 15.0) / 365.0), 0.0, None)
    daily = 0.45 + 0.25 * np.exp(-0.5 * ((hour - 8) / 2.0) ** 2) + 0.55 * np.exp(-0.5 * ((hour - 19) / 2.5) ** 2)
    shape = (1.0 + summer + winter) * daily
    shape = shape / shape.max()
    shape.setflags(write=False)
    return shape


NAMED_SHAPES = {
    "winter_peaked": winter_peaked,
    "residential_electric": residential_electric,
}


@dataclass(frozen=True, eq=False)
class Shape:
    """Hourly shape reference: a named curve or an explicit series."""

    name: str | None = None
    variant: int = 0
    explicit: np.ndarray | None = None

    def __post_init__(self):
        if (self.name is None) == (self.explicit is None):
            raise ValueError("shape needs exactly one of name or explicit series")
        if self.name is not None and self.name not in NAMED_SHAPES:
            raise ValueError(f"unknown shape {self.name!r}")
        if self.explicit is not None:
            arr = np.asarray(self.explicit, dtype=float)
            if arr.shape != (HOURS,):
                raise ValueError(f"explicit series must have {HOURS} slots, got {arr.shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, "explicit", arr)

    @property
    def values(self) -> np.ndarray:
        if self.explicit is not None:
            return self.explicit
        return NAMED_SHAPES[self.name](self.variant)

    @property
    def token(self):
        """Hashable identity used to group households that share a curve."""
        if self.name is not None:
            return (self.name, self.variant)
        return ("explicit", id(self.explicit))

    def __eq__(self, other):
        if not isinstance(other, Shape):
            return NotImplemented
        if self.name is not None or other.name is not None:
            return self.name == other.name and self.variant == other.variant
        return np.array_equal(self.explicit, other.explicit)

    def __hash__(self):
        return hash((self.name, self.variant))


def hourly_max(samples, per_hour: int = 12) -> np.ndarray:
    """Downsample sub-hourly readings to hourly by taking each hour's maximum."""
    arr = np.asarray(samples, dtype=float)
    if arr.size % per_hour:
        raise ValueError(f"{arr.size} samples is not a whole number of hours")
    return arr.reshape(-1, per_hour).max(axis=1)
