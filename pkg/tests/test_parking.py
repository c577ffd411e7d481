"""Parking manager tests"""
import pytest

import conftest
from wayfarer import energy
from wayfarer import outputs
from wayfarer import parking
from wayfarer import scenario as scn
from wayfarer.geometry import Point

DESTINATION = Point(0.0, 0.0)

BEV = scn.VehicleType(
        id="BEV", seating_capacity=4,
        primary_fuel=scn.FuelType.ELECTRICITY, primary_consumption=500.0,
        primary_capacity=2e8, charging_power=7.2)

CAR = scn.VehicleType(id="CAR", seating_capacity=4,
                      primary_consumption=2500.0, primary_capacity=2e9)


def stalls(count=2, pricing="hourly", cost=2.0, charger_power=None,
           restriction=None, zone="z0", parking_type="public"):
    return scn.ParkingStallDescriptor(
            zone=zone, parking_type=parking_type, pricing=pricing, cost=cost,
            count=count, charger_power=charger_power,
            restriction=restriction)


@pytest.mark.parametrize(
        "pricing, seconds, price", [
            ("hourly", 5400.0, 3.0),
            ("hourly", -10.0, 0.0),
            ("fixed", 5400.0, 2.0),
        ])
def test_stay_price(pricing, seconds, price):
    assert parking.stay_price(stalls(pricing=pricing), seconds) == \
        pytest.approx(price)


def test_claim_and_release_track_availability():
    events = outputs.EventLog()
    manager = parking.make_manager("TAZ", [stalls(count=1)], events=events)
    quote, = manager.inquire(DESTINATION, "z0", scn.VehicleCategory.CAR,
                             3600.0, 3600.0)
    assert quote.price == pytest.approx(2.0)
    reservation = manager.claim(quote, "car-1", 3600.0, driver_id="p1")
    with pytest.raises(parking.RaceLost):
        manager.claim(quote, "car-2", 3600.0)
    with pytest.raises(parking.NoParking):
        manager.inquire(DESTINATION, "z0", scn.VehicleCategory.CAR, 3700.0,
                        60.0)
    assert manager.release(reservation, 3600.0 + 1800.0) == \
        pytest.approx(1.0)
    assert manager.occupancy() == 0
    claim, = events.of_type("ReservesParking")
    assert claim["parkingZone"] == "z0"
    assert claim["driver"] == "p1"


def test_walk_grows_as_a_zone_fills():
    manager = parking.make_manager("TAZ", [stalls(count=4)],
                                   max_walk_distance=800.0)
    walks = []
    for n in range(4):
        quote, = manager.inquire(DESTINATION, "z0", scn.VehicleCategory.CAR,
                                 0.0, 60.0)
        walks.append(quote.walk_distance)
        manager.claim(quote, f"car-{n}", 0.0)
    assert walks == pytest.approx([0.0, 200.0, 400.0, 600.0])


def test_restricted_stalls_only_serve_their_category():
    restriction = scn.parse_time_restriction("LightDutyTruck|00:00-12:00")
    manager = parking.make_manager("TAZ", [stalls(restriction=restriction)])
    with pytest.raises(parking.NoParking):
        manager.inquire(DESTINATION, "z0", scn.VehicleCategory.CAR, 3600.0,
                        60.0)
    assert manager.inquire(DESTINATION, "z0",
                           scn.VehicleCategory.LIGHT_DUTY_TRUCK, 3600.0, 60.0)


def test_ubiquitous_parking_is_free_at_the_door():
    manager = parking.make_manager("UBIQUITOUS", [])
    quote, = manager.inquire(DESTINATION, "z9", scn.VehicleCategory.CAR, 0.0,
                             3600.0)
    assert (quote.walk_distance, quote.price) == (0.0, 0.0)


def test_link_stalls_are_quoted_within_walking_distance():
    net = conftest.line_network(lengths=(1000.0, 1000.0))
    manager = parking.make_manager(
            "LINK", [stalls(zone="l0"), stalls(zone="l1")], net=net,
            max_walk_distance=800.0)
    quote, = manager.inquire(Point(400.0, 0.0), "z0",
                             scn.VehicleCategory.CAR, 0.0, 60.0)
    assert quote.location == Point(500.0, 0.0)
    assert quote.walk_distance == pytest.approx(100.0)


def test_unknown_manager_type():
    with pytest.raises(ValueError):
        parking.make_manager("VALET", [])


def test_charging_session_caps_at_vehicle_power():
    events = outputs.EventLog()
    manager = parking.make_manager("TAZ", [stalls(charger_power=50.0)],
                                   events=events)
    quote, = manager.inquire(DESTINATION, "z0", scn.VehicleCategory.CAR, 0.0,
                             3600.0)
    reservation = manager.claim(quote, "bev-1", 0.0)
    fuel, delivered = manager.charge_session(
            "bev-1", BEV, energy.FuelState(0.0), reservation, 0.0, 3600.0)
    assert delivered == pytest.approx(7.2e3 * 3600.0)
    assert fuel.primary == pytest.approx(delivered)
    assert [e["type"] for e in events.of_type("ChargingPlugOut")] == \
        ["ChargingPlugOut"]


def test_gasoline_car_cannot_charge():
    manager = parking.make_manager("TAZ", [stalls(charger_power=50.0)])
    quote, = manager.inquire(DESTINATION, "z0", scn.VehicleCategory.CAR, 0.0,
                             3600.0)
    reservation = manager.claim(quote, "car-1", 0.0)
    with pytest.raises(parking.NotChargeable):
        manager.charge_session("car-1", CAR, energy.FuelState(1e9),
                               reservation, 0.0, 3600.0)
