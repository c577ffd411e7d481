"""Within-day simulation tests"""
import pytest

import conftest
from wayfarer import agentsim
from wayfarer import config as cfg
from wayfarer import energy
from wayfarer import modes
from wayfarer import network
from wayfarer import outputs
from wayfarer import router as routing
from wayfarer import scenario as scn
from wayfarer import skims as skimming
from wayfarer import transit
from wayfarer.geometry import Point

BUS = scn.VehicleType(id="BUS", seating_capacity=1,
                      primary_fuel=scn.FuelType.DIESEL,
                      primary_consumption=20000.0, primary_capacity=1e12,
                      category=scn.VehicleCategory.MEDIUM_DUTY_PASSENGER)

CAR = scn.VehicleType(id="CAR", seating_capacity=4,
                      primary_consumption=2500.0, primary_capacity=2e9)

CAV = scn.VehicleType(id="CAV", seating_capacity=4,
                      primary_consumption=2500.0, primary_capacity=2e9,
                      automation_level=4)

BIKE = scn.VehicleType(id="BIKE", seating_capacity=1,
                       primary_fuel=scn.FuelType.FOOD,
                       primary_consumption=50.0, primary_capacity=1e9,
                       category=scn.VehicleCategory.BIKE)


def one_bus_timetable():
    stops = {"A": Point(1000.0, 0.0), "B": Point(4000.0, 0.0)}
    trip = transit.TransitTrip(
            "t1", "r1", "bus", "BUS",
            (transit.StopTime("A", 28800.0, 28800.0, 2.0),
             transit.StopTime("B", 29400.0, 29400.0, 0.0)))
    return transit.Timetable(stops, [trip])


def commuter(person_id, net):
    home, work = Point(100.0, 0.0), Point(4900.0, 0.0)
    plan = scn.Plan((
        scn.Activity("home", home, net.taz_of(home), end_time=27600.0),
        scn.Leg(modes.Mode.WALK_TRANSIT),
        scn.Activity("work", work, net.taz_of(work), end_time=61200.0),
        scn.Leg(modes.Mode.WALK_TRANSIT),
        scn.Activity("home", home, net.taz_of(home)),
    ))
    return scn.Person(person_id, "h1", 30, 15.0, plan)


def run_day(scenario, config):
    table = network.LinkTravelTimeTable.free_flow(scenario.network)
    router = routing.Router.from_config(config, scenario.network, table,
                                        scenario.timetable)
    skims = skimming.Skims(scenario.network.taz_centroids,
                           skimming.SkimSettings.from_config(config))
    day = agentsim.AgentSim(scenario, config, router, skims)
    return day, day.run()


def test_full_transit_vehicle_sends_the_second_rider_to_replan():
    net = conftest.line_network(lengths=(1000.0, 3000.0, 1000.0),
                                both_ways=True)
    persons = {pid: commuter(pid, net) for pid in ("p1", "p2")}
    scenario = scn.Scenario(
            households={"h1": scn.Household(
                "h1", 50000.0, net.taz_of(Point(100.0, 0.0)),
                Point(100.0, 0.0), member_ids=("p1", "p2"), num_vehicles=0)},
            persons=persons, vehicle_types={"BUS": BUS}, vehicles={},
            network=net, timetable=one_bus_timetable())
    day, result = run_day(scenario, cfg.Config())

    events = result.events.to_frame()
    boardings = events[(events.type == "PersonEntersVehicle")
                       & (events.vehicleMode == "transit")]
    assert boardings.vehicle.tolist() == ["t1"]
    replans = events[events.type == "Replanning"]
    assert len(replans) == 1
    assert replans.reason.item() == "transit vehicle t1 is full"
    assert replans.person.item() != boardings.person.item()
    assert (day.transit.boardings, day.transit.denials) == (1, 1)
    assert set(result.states.values()) == {agentsim.PersonState.FINISHED}

    bus = events[(events.type == "PathTraversal") & (events.vehicle == "t1")]
    assert bus.numPassengers.tolist() == [1]


def test_transit_manager_counts_loads_per_segment():
    stops = {s: Point(1000.0 * i, 0.0) for i, s in enumerate("ABC")}
    trip = transit.TransitTrip(
            "t1", "r1", "bus", "BUS",
            (transit.StopTime("A", 0.0, 0.0, 1.0),
             transit.StopTime("B", 100.0, 100.0, 1.0),
             transit.StopTime("C", 200.0, 200.0, 0.0)))
    manager = agentsim.TransitManager(transit.Timetable(stops, [trip]),
                                      {"BUS": BUS}, outputs.EventLog())
    assert manager.board_transit("p1", transit.Ride(trip, 0, 1))
    assert manager.board_transit("p2", transit.Ride(trip, 1, 2))
    assert not manager.board_transit("p3", transit.Ride(trip, 0, 2))
    assert manager.loads["t1"] == [1, 1]


def test_running_dry_is_reported_and_the_leg_completes():
    events = outputs.EventLog()
    leg = routing.ItineraryLeg(modes.LegMode.CAR, "car-1", Point(0.0, 0.0),
                               Point(1000.0, 0.0), 0.0, 60.0, 1000.0)
    after = agentsim.traverse_leg(events, leg, "car-1", CAR,
                                  energy.FuelState(2500.0 * 400.0), 1)
    assert after.primary == 0.0
    dry, = events.of_type("OutOfFuel")
    assert dry["missingDistance"] == pytest.approx(600.0)
    assert len(events.of_type("PathTraversal")) == 1


@pytest.mark.parametrize(
        "vehicle_type, kind", [(CAR, "car"), (CAV, "cav"), (BIKE, "bike")])
def test_vehicle_kind(vehicle_type, kind):
    assert agentsim.vehicle_kind(vehicle_type) == kind


def household_car(vehicle_id, location):
    return agentsim.HouseholdVehicle(vehicle_id, CAR, location,
                                     energy.FuelState(2e9), location)


def test_household_vehicle_held_by_one_member():
    fleet = agentsim.HouseholdVehicles(
            "h1", [household_car("near", Point(10.0, 0.0)),
                   household_car("far", Point(140.0, 0.0))])
    assert [v.id for v in fleet.nearby(Point(0.0, 0.0), 150.0, "car")] == \
        ["near", "far"]
    fleet.reserve("p1", "near")
    with pytest.raises(agentsim.Conflict):
        fleet.reserve("p2", "near")
    assert [v.id for v in fleet.nearby(Point(0.0, 0.0), 150.0, "car")] == \
        ["far"]
    fleet.release("near", "p2")
    assert fleet.vehicles["near"].holder == "p1"
    fleet.release("near", "p1")
    assert fleet.vehicles["near"].holder is None


def test_household_cavs_serve_trips_they_can_reach():
    def travel_time(a, b, t):
        return a.distance_to(b) / 10.0

    home, work, shop = Point(0.0, 0.0), Point(3000.0, 0.0), \
        Point(0.0, 3000.0)

    def plan(*stops):
        elements = []
        for place, end in stops:
            elements += [scn.Activity("x", place, "z", end_time=end),
                         scn.Leg()]
        return scn.Plan(tuple(elements[:-1]))

    schedule = agentsim.schedule_household_cavs(
            {"p1": plan((home, 1000.0), (work, 5000.0), (home, None)),
             "p2": plan((home, 1100.0), (shop, 2000.0), (home, None))},
            [("cav-1", home)], travel_time)
    # the CAV drops p1 at work at 1300, too late for p2 leaving home
    assert schedule.assignments == {("p1", 0): "cav-1", ("p2", 1): "cav-1",
                                    ("p1", 1): "cav-1"}
    assert [t.key for t in schedule.trips["cav-1"]] == \
        [("p1", 0), ("p2", 1), ("p1", 1)]


def test_person_state_machine_rejects_illegal_moves():
    net = conftest.line_network()
    agent = agentsim.PersonAgent(commuter("p1", net),
                                 commuter("p1", net).plan, day=None)
    with pytest.raises(agentsim.IllegalTransition):
        agent.move(agentsim.PersonState.MOVING)


def test_small_toy_day(small_toy):
    config, scenario = small_toy
    _, first = run_day(scenario, config)
    _, second = run_day(scenario, config)
    frame = first.events.to_frame()
    assert frame.equals(second.events.to_frame())
    assert set(first.states.values()) <= agentsim.TERMINAL
    assert set(frame.type) <= set(outputs.EVENT_FIELDS)

    starts = frame[frame.type == "ActivityStart"].groupby("person").size()
    for person_id, state in first.states.items():
        if state is not agentsim.PersonState.FINISHED:
            continue
        plan = first.plans[person_id]
        assert starts[person_id] == len(plan.activities)
        assert all(leg.mode is not None for leg in plan.legs)
