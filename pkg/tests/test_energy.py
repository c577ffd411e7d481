"""Fuel and battery tests"""
import pytest

from wayfarer import energy
from wayfarer import scenario as scn

PHEV = scn.VehicleType(
        id="PHEV", seating_capacity=4,
        primary_fuel=scn.FuelType.ELECTRICITY, primary_consumption=1.0,
        primary_capacity=1000.0, secondary_fuel=scn.FuelType.GASOLINE,
        secondary_consumption=2.0, secondary_capacity=5000.0,
        charging_power=7.2)

BEV = scn.VehicleType(
        id="BEV", seating_capacity=4,
        primary_fuel=scn.FuelType.ELECTRICITY, primary_consumption=500.0,
        primary_capacity=2e8, charging_power=7.2)


def test_hybrid_drains_primary_first():
    after = energy.consume_fuel(energy.FuelState(1000.0, 5000.0), PHEV,
                                1500.0)
    assert after.primary == 0.0
    assert 5000.0 - after.secondary == 1000.0


def test_short_trip_stays_on_primary():
    after = energy.consume_fuel(energy.FuelState(1000.0, 5000.0), PHEV, 400.0)
    assert after == energy.FuelState(600.0, 5000.0)


def test_running_dry_reports_the_missing_distance():
    with pytest.raises(energy.OutOfFuel) as info:
        energy.consume_fuel(energy.FuelState(1000.0, 1000.0), PHEV, 2000.0)
    assert info.value.missing_meters == pytest.approx(500.0)
    assert info.value.state == energy.FuelState(0.0, 0.0)


@pytest.mark.parametrize(
        "start, seconds, expected", [
            (0.0, 3600.0, 7.2e3 * 3600.0),
            (1.9e8, 3600.0, 1e7),
            (2e8, 60.0, 0.0),
        ])
def test_charging_stops_at_capacity(start, seconds, expected):
    state, delivered = energy.charge(energy.FuelState(start), BEV, 7.2,
                                     seconds)
    assert delivered == pytest.approx(expected)
    assert state.primary <= BEV.primary_capacity


def test_range_covers_both_stores():
    assert energy.FuelState(1000.0, 5000.0).range(PHEV) == 3500.0


def test_state_of_charge_bounds():
    with pytest.raises(ValueError):
        energy.FuelState.from_state_of_charge(BEV, 1.5)
    assert energy.FuelState.from_state_of_charge(BEV, 0.5) \
        .state_of_charge(BEV) == 0.5
    assert energy.refill(energy.FuelState(0.0), BEV).primary == 2e8
