"""Shared fleet tests"""
import numpy as np
import pytest

from wayfarer import modes
from wayfarer import scenario as scn
from wayfarer import sharing
from wayfarer.geometry import Point

CENTROIDS = {"1": Point(0.0, 0.0), "2": Point(1000.0, 0.0)}


def spec(strategy=sharing.BY_TAZ, **kwargs):
    kwargs.setdefault("taz_counts", {"1": 2, "2": 1})
    return scn.SharedFleetSpec("bikes", "SHARED-BIKE", modes.Mode.SHARED_BIKE,
                               strategy, **kwargs)


def fleet(**kwargs):
    fleet_spec = spec(**kwargs)
    vehicles = sharing.init_fleet(fleet_spec, [Point(10.0, 0.0)], CENTROIDS,
                                  np.random.default_rng(0))
    return sharing.SharedFleetManager(fleet_spec, vehicles)


def test_by_taz_fleet_starts_at_zone_centroids():
    manager = fleet()
    assert sorted(v.location for v in manager.available()) == \
        [Point(0.0, 0.0), Point(0.0, 0.0), Point(1000.0, 0.0)]


def test_fixed_fleet_starts_at_homes():
    manager = fleet(strategy=sharing.FIXED, size=3, taz_counts={})
    assert [v.location for v in manager.available()] == [Point(10.0, 0.0)] * 3


def test_nearest_vehicle_within_the_search_radius():
    manager = fleet(search_radius=500.0)
    assert manager.find_vehicle(Point(900.0, 0.0)).location == \
        Point(1000.0, 0.0)
    assert manager.find_vehicle(Point(500.0, 3000.0)) is None


def test_a_vehicle_can_only_be_taken_once():
    manager = fleet()
    vehicle = manager.find_vehicle(Point(950.0, 0.0))
    manager.take(vehicle, "p1")
    with pytest.raises(sharing.VehicleTaken):
        manager.take(vehicle, "p2")
    assert manager.find_vehicle(Point(950.0, 0.0)) is None
    assert manager.return_vehicle(vehicle.id, Point(0.0, 50.0)) == \
        Point(0.0, 50.0)
    assert len(manager.available()) == 3


def test_round_trip_vehicles_go_back_to_pickup():
    manager = fleet(round_trip=True)
    vehicle = manager.take(manager.find_vehicle(Point(1000.0, 0.0)), "p1")
    assert manager.drop_location(vehicle.id, Point(0.0, 0.0)) == \
        Point(1000.0, 0.0)
    assert manager.return_vehicle(vehicle.id, Point(0.0, 0.0)) == \
        Point(1000.0, 0.0)


def test_inexhaustible_fleet_always_has_a_vehicle():
    manager = fleet(strategy=sharing.INEXHAUSTIBLE, taz_counts={})
    assert manager.available() == []
    here = Point(123.0, 456.0)
    first = manager.find_vehicle(here)
    second = manager.find_vehicle(here)
    assert first.id != second.id
    manager.take(first, "p1")
    manager.return_vehicle(first.id, here)
    assert manager.available() == []


def test_docked_fleet_returns_to_the_nearest_free_dock():
    docks = (scn.Dock("d1", Point(0.0, 0.0), 1),
             scn.Dock("d2", Point(800.0, 0.0), 2))
    manager = fleet(strategy=sharing.BY_TAZ, taz_counts={"1": 1},
                    docks=docks)
    vehicle, = manager.available()
    assert vehicle.dock_id == "d1"
    manager.take(vehicle, "p1")
    assert manager.drop_location(vehicle.id, Point(100.0, 0.0)) == \
        Point(0.0, 0.0)
    assert manager.return_vehicle(vehicle.id, Point(700.0, 0.0)) == \
        Point(800.0, 0.0)
    assert manager.occupancy == {"d1": 0, "d2": 1}


def test_full_docks():
    docks = (scn.Dock("d1", Point(0.0, 0.0), 1),)
    manager = fleet(taz_counts={"1": 1}, docks=docks)
    vehicle, = manager.available()
    manager.take(vehicle, "p1")
    other = sharing.SharedVehicle("extra", "bikes", Point(5.0, 0.0), "d1")
    manager.occupancy["d1"] = 1
    manager.vehicles[other.id] = other
    with pytest.raises(sharing.DockFull):
        manager.return_vehicle(vehicle.id, Point(0.0, 0.0))
    assert manager.return_vehicle(vehicle.id, Point(30.0, 0.0),
                                  dockless_if_full=True) == Point(30.0, 0.0)
