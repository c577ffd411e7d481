"""Timetable search and transit itinerary tests"""
import pandas as pd
import pytest

import conftest
from wayfarer import choice
from wayfarer import modes
from wayfarer import network
from wayfarer import router
from wayfarer import transit
from wayfarer.geometry import Point

STOPS = {
    "A": Point(0.0, 0.0),
    "B": Point(1000.0, 0.0),
    "C": Point(2000.0, 0.0),
    "D": Point(2000.0, 1000.0),
    "E": Point(2100.0, 0.0),
    "F": Point(2100.0, 1500.0),
}


def trip(trip_id, route_id, *calls, fare=2.0):
    return transit.TransitTrip(
            trip_id, route_id, "bus", "BUS",
            tuple(transit.StopTime(stop, arrive, depart, fare)
                  for stop, arrive, depart in calls))


def timetable(stops=None, trips=None):
    trips = trips if trips is not None else [
        trip("t1", "r1", ("A", 100, 100), ("B", 200, 210), ("C", 300, 300)),
        trip("t2", "r1", ("A", 700, 700), ("B", 800, 810), ("C", 900, 900)),
        trip("u1", "r2", ("C", 350, 350), ("D", 500, 500)),
        trip("u2", "r2", ("C", 1000, 1000), ("D", 1150, 1150)),
        trip("v1", "r3", ("E", 400, 400), ("F", 600, 600)),
    ]
    return transit.Timetable(stops or STOPS, trips, transfer_radius=300.0,
                             walk_speed=1.4)


def test_direct_journey():
    found = timetable().journeys({"A": 0.0}, {"C": 0.0})
    assert len(found) == 1
    journey, = found
    assert journey.arrive == 300
    assert journey.transfers == 0
    assert [r.trip.id for r in journey.rides] == ["t1"]
    assert journey.fare == 2.0


def test_journey_with_a_vehicle_change():
    journey, = timetable().journeys({"A": 0.0}, {"D": 0.0})
    assert [r.trip.id for r in journey.rides] == ["t1", "u1"]
    assert journey.transfers == 1
    assert journey.arrive == 500


def test_excluded_trip_is_not_boarded():
    journey, = timetable().journeys({"A": 0.0}, {"D": 0.0},
                                    excluded_trips=frozenset({"u1"}))
    assert [r.trip.id for r in journey.rides] == ["t1", "u2"]
    assert journey.arrive == 1150


def test_footpath_between_nearby_stops():
    journey, = timetable().journeys({"A": 0.0}, {"F": 0.0})
    kinds = [type(step).__name__ for step in journey.steps]
    assert kinds == ["Ride", "Transfer", "Ride"]
    assert journey.steps[1].arrive == pytest.approx(300 + 100 / 1.4)
    assert journey.arrive == 600


def test_transfer_limit_applies():
    assert timetable().journeys({"A": 0.0}, {"D": 0.0},
                                max_transfers=0) == []


def test_nothing_after_the_last_departure():
    assert timetable().journeys({"A": 2000.0}, {"C": 0.0}) == []


def test_stops_near_are_sorted_by_distance():
    assert timetable().stops_near(Point(1900.0, 0.0), 250.0) == ["C", "E"]


def test_timetable_from_frames():
    routes = pd.DataFrame({"route_id": ["r1"], "type": ["rail"]})
    trips = pd.DataFrame({"trip_id": ["t1"], "route_id": ["r1"],
                          "vehicle_type_id": ["BUS"]})
    stop_times = pd.DataFrame({
        "trip_id": ["t1", "t1"], "stop_seq": [1, 0], "stop_id": ["B", "A"],
        "x": [1000.0, 0.0], "y": [0.0, 0.0], "arrival_s": [200.0, 100.0],
        "departure_s": [200.0, 100.0], "fare_usd": [0.0, 2.5]})
    table = transit.Timetable.from_frames(routes, trips, stop_times)
    loaded = table.trips["t1"]
    assert loaded.stops == ("A", "B")
    assert loaded.route_type == "rail"
    assert loaded.stop_times[0].fare == 2.5


def walk_router():
    net = conftest.line_network(lengths=(1000.0, 1000.0), both_ways=True)
    table = network.LinkTravelTimeTable.free_flow(net)
    stops = {k: STOPS[k] for k in "ABC"}
    trips = [
        trip("t1", "r1", ("A", 100, 100), ("B", 200, 210), ("C", 300, 300)),
        trip("t2", "r1", ("A", 700, 700), ("B", 800, 810), ("C", 900, 900)),
    ]
    return router.Router(net, table, timetable(stops, trips))


def test_walk_transit_itinerary(rng):
    itinerary, = walk_router().transit_itineraries(
            Point(0.0, 0.0), Point(2000.0, 0.0), 0.0,
            [router.TransitAccess(modes.Mode.WALK_TRANSIT)], 15.0,
            choice.ModeChoiceParams(), rng, body_id="body-p1")
    assert itinerary.classification is modes.Mode.WALK_TRANSIT
    transit_legs = [l for l in itinerary.legs
                    if l.mode is modes.LegMode.TRANSIT]
    assert [l.vehicle_id for l in transit_legs] == ["t1"]
    assert transit_legs[0].distance == pytest.approx(2000.0)
    assert itinerary.total_cost == pytest.approx(2.0)
    assert itinerary.arrive == pytest.approx(300.0)


def test_fare_multiplier_scales_fares(rng):
    route = walk_router()
    route.fare_multiplier = 2.0
    itinerary, = route.transit_itineraries(
            Point(0.0, 0.0), Point(2000.0, 0.0), 0.0,
            [router.TransitAccess(modes.Mode.WALK_TRANSIT)], 15.0,
            choice.ModeChoiceParams(), rng)
    assert itinerary.total_cost == pytest.approx(4.0)


def test_no_service_without_a_timetable(rng):
    net = conftest.line_network()
    route = router.Router(net, network.LinkTravelTimeTable.free_flow(net))
    with pytest.raises(transit.NoService):
        route.transit_itineraries(
                Point(0.0, 0.0), Point(1000.0, 0.0), 0.0,
                [router.TransitAccess(modes.Mode.WALK_TRANSIT)], 15.0,
                choice.ModeChoiceParams(), rng)
