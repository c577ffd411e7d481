"""Event log and derived output tests"""
import filecmp

import pandas as pd
import pytest

from wayfarer import energy
from wayfarer import modes
from wayfarer import outputs
from wayfarer import router
from wayfarer import scenario as scn
from wayfarer.geometry import Point

MILE = outputs.METERS_PER_MILE

CAR = scn.VehicleType(id="CAR", seating_capacity=4,
                      primary_fuel=scn.FuelType.GASOLINE,
                      primary_consumption=2500.0, primary_capacity=2e9)


def test_events_are_validated():
    events = outputs.EventLog(end_time=100.0)
    with pytest.raises(ValueError):
        events.emit(0.0, "Teleport", person="p1")
    with pytest.raises(ValueError):
        events.emit(0.0, "ModeChoice", person="p1")
    with pytest.raises(ValueError):
        events.emit(200.0, "ModeChoice", person="p1", mode="CAR")
    assert len(events) == 0


def test_frame_orders_by_time_then_emission():
    events = outputs.EventLog()
    events.emit(5.0, "ActivityEnd", person="b", actType="home")
    events.emit(1.0, "ActivityEnd", person="a", actType="home")
    events.emit(5.0, "ModeChoice", person="b", mode="CAR")
    frame = events.to_frame()
    assert frame.type.tolist() == ["ActivityEnd", "ActivityEnd", "ModeChoice"]
    assert frame.person.tolist() == ["a", "b", "b"]
    assert list(frame.columns) == ["time", "type", "actType", "mode",
                                   "person"]


def test_completed_trip_takes_the_last_choice_before_arrival():
    events = outputs.EventLog()
    events.emit(0.0, "ActivityStart", person="p1", actType="home")
    events.emit(100.0, "ModeChoice", person="p1", mode="CAR")
    events.emit(110.0, "ModeChoice", person="p1", mode="WALK")
    events.emit(500.0, "ActivityStart", person="p1", actType="work")
    events.emit(600.0, "ModeChoice", person="p2", mode="BIKE")
    trips = outputs.completed_trips(events.to_frame())
    assert trips.to_dict("records") == [
        {"person": "p1", "time": 500.0, "mode": "WALK"}]


def day_of_events():
    events = outputs.EventLog()
    leg = router.ItineraryLeg(modes.LegMode.CAR, "car-1", Point(0.0, 0.0),
                              Point(MILE, 0.0), 0.0, 100.0, MILE,
                              links=("l0",))
    outputs.path_traversal(events, leg, "car-1", CAR, 1,
                           energy.FuelState(2e9), energy.FuelState(1e9),
                           free_flow_time=60.0)
    events.emit(3960.0, "PathTraversal", vehicle="bus-1",
                vehicleType="BUS", mode="transit", numPassengers=50,
                departureTime=3600.0, arrivalTime=3960.0, length=2 * MILE,
                seatingCapacity=30)
    events.emit(10.0, "ModeChoice", person="p2", mode="RIDE_HAIL")
    events.emit(20.0, "ModeChoice", person="p3", mode="RIDE_HAIL_POOLED")
    events.emit(20.0, "Replanning", person="p3",
                reason="ride-hail unavailable")
    events.emit(310.0, "PersonEntersVehicle", person="p2", vehicle="rh-1",
                vehicleMode="ride_hail")
    return events.to_frame()


def test_summary_of_a_day():
    row = outputs.summarize(day_of_events(), 3)
    assert row["iteration"] == 3
    assert row["totalVehicleDelayHours"] == pytest.approx(40.0 / 3600.0)
    assert row["crowdedTransitHours"] == pytest.approx(2.0)
    assert row["vehicleMilesTraveled"] == pytest.approx(1.0)
    assert row["fuelConsumedGJ_Gasoline"] == pytest.approx(1.0)
    assert row["rideHailRequests"] == 2
    assert not row["noRideHailRequests"]
    assert row["unmatchedRideHailFraction"] == pytest.approx(0.5)
    assert row["averageRideHailWaitMin"] == pytest.approx(5.0)


def test_summary_without_ride_hail():
    events = outputs.EventLog()
    events.emit(0.0, "ActivityEnd", person="p1", actType="home")
    row = outputs.summarize(events.to_frame(), 0)
    assert row["noRideHailRequests"]
    assert row["unmatchedRideHailFraction"] == 0.0
    assert row["vehicleMilesTraveled"] == 0.0


def test_vehicle_and_person_miles_by_mode():
    table = outputs.vmt_pmt(day_of_events()).set_index("mode")
    assert table.loc["car"].tolist() == pytest.approx([1.0, 1.0])
    assert table.loc["transit"].tolist() == pytest.approx([2.0, 100.0])
    by_hour = outputs.vmt_pmt(day_of_events(), group_by="hour")
    assert by_hour.hour.tolist() == [0, 1]
    with pytest.raises(ValueError):
        outputs.vmt_pmt(day_of_events(), group_by="weekday")


def test_mode_split_series_and_plot(tmp_path):
    series = outputs.mode_split_series({
        1: pd.Series({"CAR": 3, "WALK": 1}),
        0: pd.Series({"CAR": 2}),
    })
    assert series.to_dict("records") == [
        {"iteration": 0, "mode": "CAR", "trips": 2},
        {"iteration": 1, "mode": "CAR", "trips": 3},
        {"iteration": 1, "mode": "WALK", "trips": 1},
    ]
    path = tmp_path / "modeSplit.svg"
    outputs.plot_mode_split(series, str(path))
    assert path.read_text().lstrip().startswith("<?xml")


def test_rows_append_under_one_header(tmp_path):
    path = str(tmp_path / "summaryStats.csv")
    outputs.append_row({"iteration": 0, "vmt": 1.5}, path)
    outputs.append_row({"iteration": 1, "vmt": 2.5}, path)
    assert pd.read_csv(path).to_dict("list") == {"iteration": [0, 1],
                                                 "vmt": [1.5, 2.5]}


def test_gzipped_event_files_are_reproducible(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first = tmp_path / "a" / "events.csv.gz"
    second = tmp_path / "b" / "events.csv.gz"
    outputs.write_events(day_of_events(), str(first))
    outputs.write_events(day_of_events(), str(second))
    assert filecmp.cmp(first, second, shallow=False)
    again = outputs.read_events(str(first))
    assert len(again) == 6
    assert again.loc[again.type == "PathTraversal", "vehicle"].tolist() == \
        ["car-1", "bus-1"]
