import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import KVA_PER_CCF, spike
from nhpt.costs import (
    ConfigurationError,
    CostBook,
    PhysicalConstants,
    UpgradeAction,
    UpgradeKind,
    ashp_electric_adder,
    ashp_install_cost,
    carbon_emissions,
    gas_to_heat,
    heat_to_electric,
    install_cost_for_usage,
    maintenance_savings,
    upgrade_action,
)
from nhpt.entities import Household, IncomeGroup
from nhpt.network import PipeEdge
from nhpt.profiles import HOURS, Shape

K = PhysicalConstants(median_annual_gas=1000.0, maintenance_rate=2.0)
BOOK = CostBook(K)


def household(annual, shape=None):
    return Household("h", (0, 0), annual, shape or Shape("winter_peaked"), "t", IncomeGroup.LOW)


class TestConversions:
    def test_gas_to_heat(self):
        assert gas_to_heat(0, K) == 0
        assert gas_to_heat(1, K.with_overrides(furnace_efficiency=1.0)) == 103_700
        assert gas_to_heat(100, K) == pytest.approx(9_073_750, rel=1e-15)

    def test_heat_to_electric(self):
        assert heat_to_electric(0, K) == 0
        assert heat_to_electric(1000, K.with_overrides(cop=1.0)) == pytest.approx(0.293071, rel=1e-15)
        # 9,073,750 / 2.5 = 3,629,500 BTU delivered per BTU drawn; times 0.000293071
        assert heat_to_electric(9_073_750, K) == pytest.approx(1063.7012, abs=1e-4)

    def test_adder(self):
        zero = Household.from_hourly("z", (0, 0), np.zeros(HOURS), "t", "low")
        assert not ashp_electric_adder(zero, K).any()
        one = Household.from_hourly("o", (0, 0), spike(1.0, 100), "t", "low")
        adder = ashp_electric_adder(one, K)
        assert np.count_nonzero(adder) == 1
        assert adder[100] == pytest.approx(10.637012, abs=1e-6)
        assert adder[100] == pytest.approx(KVA_PER_CCF, rel=1e-12)

    def test_adder_sums_to_annual_conversion(self):
        h = household(850.0)
        total = heat_to_electric(gas_to_heat(h.annual_gas, K), K)
        assert ashp_electric_adder(h, K).sum() == pytest.approx(total, rel=1e-12)

    def test_carbon(self):
        assert carbon_emissions(1, K) == 0.00551
        assert carbon_emissions(0, K) == 0
        assert carbon_emissions(1000, K) == pytest.approx(5.51, rel=1e-15)

    def test_install_cost(self):
        assert ashp_install_cost(household(1000.0), K) == 15_000
        assert ashp_install_cost(household(2000.0), K) == 30_000
        assert ashp_install_cost(household(0.0), K) == 0

    def test_install_cost_needs_median(self):
        with pytest.raises(ConfigurationError):
            install_cost_for_usage(10.0, PhysicalConstants())

    def test_maintenance_savings(self):
        assert maintenance_savings([], K) == 0
        assert maintenance_savings([PipeEdge("a", "b", 100.0)], K) == 200.0
        with_services = PipeEdge("a", "b", 100.0, 0, ("h1", "h2"), (5.0, 7.0))
        assert maintenance_savings([with_services], K) == 224.0
        doubled = K.with_overrides(maintenance_multiplier=2.0)
        assert maintenance_savings([with_services], doubled) == 448.0


class TestConstants:
    def test_defaults_validate_once_median_is_set(self):
        assert K.validate() == []
        assert any("median_annual_gas" in p for p in PhysicalConstants().validate())

    def test_efficiency_bound(self):
        assert any("furnace_efficiency" in p for p in K.with_overrides(furnace_efficiency=1.2).validate())

    def test_unknown_override(self):
        with pytest.raises(ConfigurationError, match="unknown constant"):
            K.with_overrides(warp_factor=9)

    def test_cost_book_checks_tables(self):
        with pytest.raises(ConfigurationError):
            CostBook(K, pole_top_denominations=(25.0, 15.0))
        with pytest.raises(ConfigurationError):
            CostBook(K, pad_mount_cost_range=(10.0, 5.0))


class TestUpgradeRules:
    def test_below_threshold(self):
        a = upgrade_action(25, 30, BOOK)
        assert a.kind is UpgradeKind.NO_ACTION and a.cost == 0

    def test_rule_one(self):
        a = upgrade_action(25, 40, BOOK)
        assert a.kind is UpgradeKind.UPGRADE_POLE_TOP and a.rule == 1
        assert a.purchased_units == (50.0,)
        # 4,225 + 21,300 * 35 / 60
        assert a.cost == pytest.approx(16_650, abs=1e-9)
        assert a.capacity_after == 50

    def test_rule_four(self):
        a = upgrade_action(100, 130, BOOK)
        assert a.kind is UpgradeKind.ADDITIONAL_PAD_MOUNT and a.rule == 4
        assert a.purchased_units == (75.0,)
        assert a.cost == 74_900
        assert a.capacity_after == 175

    def test_rule_two_stacks_pole_tops(self):
        a = upgrade_action(20, 200, BOOK)
        assert a.kind is UpgradeKind.ADDITIONAL_POLE_TOP and a.rule == 2
        assert a.purchased_units == (75.0, 75.0, 37.5)
        assert a.capacity_after >= 200

    def test_rule_three_pad_mount_replacement(self):
        a = upgrade_action(80, 300, BOOK)
        assert a.kind is UpgradeKind.REPLACE_WITH_PAD_MOUNT
        assert a.purchased_units == (167.0, 150.0)
        assert a.capacity_after == 317

    def test_gap_falls_back_and_is_flagged(self):
        a = upgrade_action(50, 80, BOOK)
        assert a.fallback and a.rule == 2
        assert a.kind is UpgradeKind.ADDITIONAL_POLE_TOP
        assert a.capacity_after >= 80

    def test_unit_cost_interpolation(self):
        assert BOOK.unit_cost("pole_top", 15) == 4_225
        assert BOOK.unit_cost("pole_top", 75) == 25_525
        assert BOOK.unit_cost("pad_mount", 167) == 149_800
        assert BOOK.unit_cost("pad_mount", 100) == pytest.approx(74_900 + 74_900 * 25 / 92)

    def test_round_trip(self):
        a = upgrade_action(20, 200, BOOK)
        assert UpgradeAction.from_dict(a.to_dict()) == a


@given(st.floats(1.0, 250.0), st.floats(0.0, 600.0))
def test_upgrade_is_total_and_priced_within_ranges(capacity, peak):
    a = upgrade_action(capacity, peak, BOOK)
    assert a == upgrade_action(capacity, peak, BOOK)
    if peak <= 1.25 * capacity:
        assert a.kind is UpgradeKind.NO_ACTION
        return
    assert a.capacity_after >= peak
    family = "pad_mount" if a.kind in (UpgradeKind.REPLACE_WITH_PAD_MOUNT, UpgradeKind.ADDITIONAL_PAD_MOUNT) else "pole_top"
    lo, hi = getattr(BOOK, f"{family}_cost_range")
    n = len(a.purchased_units)
    assert lo * n - 1e-9 <= a.cost <= hi * n + 1e-9
    assert math.isclose(a.cost, sum(BOOK.unit_cost(family, u) for u in a.purchased_units))


finite = st.floats(0.0, 1e6, allow_nan=False)


@given(finite, finite, st.floats(0.0, 100.0))
def test_linear_maps(a, b, lam):
    for f in (gas_to_heat, heat_to_electric, carbon_emissions, install_cost_for_usage):
        assert f(a + b, K) == pytest.approx(f(a, K) + f(b, K), rel=1e-12, abs=1e-300)
        assert f(lam * a, K) == pytest.approx(lam * f(a, K), rel=1e-12, abs=1e-300)
