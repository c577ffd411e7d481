"""Itinerary construction tests"""
import dataclasses

import pytest

import conftest
from wayfarer import modes
from wayfarer import network
from wayfarer import parking
from wayfarer import ridehail
from wayfarer import router
from wayfarer.geometry import Point

ORIGIN = Point(0.0, 0.0)
MIDDLE = Point(1000.0, 0.0)
DESTINATION = Point(2000.0, 0.0)


@pytest.fixture
def route(line):
    return router.Router(line, network.LinkTravelTimeTable.free_flow(line))


def test_walk_itinerary_follows_the_network(route):
    itinerary = route.walk_itinerary(ORIGIN, DESTINATION, 0.0, "body-p1")
    leg, = itinerary.legs
    assert itinerary.classification is modes.Mode.WALK
    assert leg.links == ("l0", "l1")
    assert leg.vehicle_id == "body-p1"
    assert leg.arrive == pytest.approx(2000.0 / 1.4)


def test_walk_falls_back_to_a_straight_line():
    net = conftest.line_network(lengths=(1000.0, 1000.0))
    route = router.Router(net, network.LinkTravelTimeTable.free_flow(net))
    leg = route.walk_leg(DESTINATION, ORIGIN, 0.0)
    assert leg.links == ()
    assert leg.distance == pytest.approx(2000.0)


def test_drive_leg_reuses_a_stored_path_that_still_fits(route):
    fresh = route.drive_leg(ORIGIN, DESTINATION, 100.0, "car-1")
    assert fresh.links == ("l0", "l1")
    assert fresh.arrive == pytest.approx(200.0)
    stored = route.drive_leg(ORIGIN, DESTINATION, 100.0, "car-1",
                             links=("l0", "l1"))
    assert stored.links == fresh.links
    assert stored.arrive == pytest.approx(fresh.arrive)
    rerouted = route.drive_leg(ORIGIN, DESTINATION, 100.0, "car-1",
                               links=("r0",))
    assert rerouted.links == ("l0", "l1")


def test_drive_leg_is_charged_its_tolls():
    net = conftest.line_network(lengths=(1000.0,))
    tolled = network.Network(
            net.nodes,
            [dataclasses.replace(net.links["l0"], toll=1.5)],
            {"z0": ORIGIN})
    route = router.Router(tolled,
                          network.LinkTravelTimeTable.free_flow(tolled))
    leg = route.drive_leg(ORIGIN, MIDDLE, 0.0, "car-1", value_of_time=20.0)
    assert leg.cost == pytest.approx(1.5)


def test_car_itinerary_walks_from_the_stall(route):
    quote = parking.StallQuote("public-z2", "z2", walk_distance=140.0,
                               price=3.0)
    itinerary = route.build_car_itinerary(ORIGIN, DESTINATION, 0.0,
                                          "body-p1", "car-1", ORIGIN, quote)
    access, drive, egress = itinerary.legs
    assert access.duration == 0.0
    assert drive.mode is modes.LegMode.CAR
    assert egress.duration == pytest.approx(100.0)
    assert itinerary.total_cost == pytest.approx(3.0)
    assert itinerary.arrive == pytest.approx(200.0)
    assert itinerary.parking is quote


@pytest.mark.parametrize(
        "pooled, classification", [
            (False, modes.Mode.RIDE_HAIL),
            (True, modes.Mode.RIDE_HAIL_POOLED),
        ])
def test_ride_hail_itinerary_waits_for_pickup(route, pooled, classification):
    quote = ridehail.Quote("default", wait=120.0, price=8.0,
                           travel_time=200.0, distance=2000.0, pooled=pooled)
    itinerary = route.ride_hail_itinerary(ORIGIN, DESTINATION, 0.0,
                                          "body-p1", quote)
    assert itinerary.classification is classification
    assert itinerary.legs[1].depart == 120.0
    assert itinerary.arrive == pytest.approx(320.0)
    assert itinerary.total_cost == 8.0


def test_shared_bike_is_charged_by_the_minute(route):
    itinerary = route.shared_itinerary(
            ORIGIN, DESTINATION, 0.0, "body-p1", modes.Mode.SHARED_BIKE,
            "bike-7", MIDDLE, price_per_minute=0.15)
    access, ride, egress = itinerary.legs
    assert access.arrive == pytest.approx(1000.0 / 1.4)
    assert ride.mode is modes.LegMode.BIKE
    assert ride.duration == pytest.approx(1000.0 / 4.5)
    assert itinerary.total_cost == pytest.approx(0.15 * ride.duration / 60)
    assert egress.duration == 0.0
    assert itinerary.shared_vehicle_id == "bike-7"


def test_overlapping_legs_are_rejected():
    first = router.ItineraryLeg(modes.LegMode.WALK, "b", ORIGIN, MIDDLE,
                                0.0, 100.0, 140.0)
    second = router.ItineraryLeg(modes.LegMode.WALK, "b", MIDDLE, DESTINATION,
                                 50.0, 150.0, 140.0)
    with pytest.raises(ValueError):
        router.Itinerary(modes.Mode.WALK, (first, second))


def test_new_table_keeps_the_slow_mode_cache(route, line):
    route.walk_itinerary(ORIGIN, DESTINATION, 0.0, "body-p1")
    other = route.with_table(network.LinkTravelTimeTable.free_flow(line))
    assert other._path_cache is route._path_cache  # pylint: disable=protected-access
