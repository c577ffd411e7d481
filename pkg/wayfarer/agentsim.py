"""
Within-day simulation

Every person is an actor walking a small state machine: end an activity,
choose a mode, travel leg by leg and start the next activity. Vehicles,
stalls and transit seats are shared through manager objects that only ever
change state while one trigger is being handled, so every claim on them is
serialized by the scheduler.
"""
import dataclasses
import enum
import itertools
import logging
import math
import typing

from . import choice
from . import energy
from . import errors
from . import modes
from . import network
from . import outputs
from . import parking
from . import physsim
from . import ridehail
from . import router as routing
from . import scenario as scen
from . import scheduler
from . import sharing
from . import streams
from . import transit
from .geometry import Point

LOG = logging.getLogger(__name__)

# Mode choice attempts for one trip before only walking is offered
MAX_ATTEMPTS = 20


class Conflict(errors.WayfarerError):
    """The vehicle is held by another household member"""


class IllegalTransition(errors.WayfarerError):
    """A person was moved along an edge its state machine lacks"""


class PersonState(enum.Enum):
    PERFORMING_ACTIVITY = "PerformingActivity"
    CHOOSING_MODE = "ChoosingMode"
    WAITING_FOR_VEHICLE = "WaitingForVehicle"
    MOVING = "Moving"
    WAITING_TO_BOARD = "WaitingToBoard"
    REPLANNING = "Replanning"
    FINISHED = "Finished"
    STUCK = "Stuck"


TERMINAL = frozenset({PersonState.FINISHED, PersonState.STUCK})

TRANSITIONS = {
    PersonState.PERFORMING_ACTIVITY: frozenset({
        PersonState.CHOOSING_MODE, PersonState.FINISHED, PersonState.STUCK}),
    PersonState.CHOOSING_MODE: frozenset({
        PersonState.MOVING, PersonState.WAITING_FOR_VEHICLE,
        PersonState.WAITING_TO_BOARD, PersonState.CHOOSING_MODE,
        PersonState.REPLANNING}),
    PersonState.MOVING: frozenset({
        PersonState.MOVING, PersonState.WAITING_TO_BOARD,
        PersonState.WAITING_FOR_VEHICLE, PersonState.PERFORMING_ACTIVITY,
        PersonState.REPLANNING, PersonState.STUCK}),
    PersonState.WAITING_TO_BOARD: frozenset({
        PersonState.MOVING, PersonState.REPLANNING, PersonState.STUCK}),
    PersonState.WAITING_FOR_VEHICLE: frozenset({
        PersonState.MOVING, PersonState.REPLANNING, PersonState.STUCK}),
    PersonState.REPLANNING: frozenset({PersonState.CHOOSING_MODE}),
    PersonState.FINISHED: frozenset(),
    PersonState.STUCK: frozenset(),
}


# Person payloads


@dataclasses.dataclass(frozen=True)
class ActivityEndTrigger:
    activity_index: int


@dataclasses.dataclass(frozen=True)
class LegEndTrigger:
    leg_index: int


@dataclasses.dataclass(frozen=True)
class BoardTrigger:
    leg_index: int


# Household vehicles


@dataclasses.dataclass
class HouseholdVehicle:
    """
    Live state of a household car, bike or CAV

    * serves: the activity location the vehicle was last left for
    * holder: the person who has it reserved
    * stall: the stall reservation while parked in a managed stall
    * busy_until: when a CAV finishes its current drive
    * pending: scheduled CAV trips not yet driven, in order
    """
    id: str
    vehicle_type: scen.VehicleType
    location: Point
    fuel: energy.FuelState
    serves: Point
    holder: typing.Optional[str] = None
    stall: typing.Optional[parking.Reservation] = None
    busy_until: float = 0.0
    pending: list = dataclasses.field(default_factory=list)


def vehicle_kind(vehicle_type, cav_level=4):
    """car, bike or cav"""
    if vehicle_type.category is scen.VehicleCategory.BIKE:
        return "bike"
    if vehicle_type.automation_level >= cav_level:
        return "cav"
    return "car"


class HouseholdVehicles:
    """Reservations on the vehicles of one household"""

    def __init__(self, household_id, vehicles, cav_level=4):
        self.household_id = household_id
        self.vehicles = {v.id: v for v in vehicles}
        self.cav_level = cav_level

    def kind(self, vehicle):
        return vehicle_kind(vehicle.vehicle_type, self.cav_level)

    def nearby(self, location, radius, kind):
        """Free vehicles of a kind left for a place within radius"""
        found = [v for v in self.vehicles.values()
                 if v.holder is None and self.kind(v) == kind
                 and v.serves.distance_to(location) <= radius]
        return sorted(found, key=lambda v: (v.serves.distance_to(location),
                                            v.id))

    def reserve(self, person_id, vehicle_id):
        """
        Hold a vehicle for one person

        Raises:
            Conflict: another member holds it
        """
        vehicle = self.vehicles[vehicle_id]
        if vehicle.holder not in (None, person_id):
            raise Conflict(f"vehicle {vehicle_id} is held by {vehicle.holder}")
        vehicle.holder = person_id
        return vehicle

    def release(self, vehicle_id, person_id):
        vehicle = self.vehicles.get(vehicle_id)
        if vehicle is not None and vehicle.holder == person_id:
            vehicle.holder = None


@dataclasses.dataclass(frozen=True)
class CavTrip:
    person_id: str
    trip_index: int
    origin: Point
    destination: Point
    depart: float

    @property
    def key(self):
        return self.person_id, self.trip_index


@dataclasses.dataclass(frozen=True)
class CavSchedule:
    """
    * assignments: (person id, trip index) -> CAV id
    * trips: CAV id -> the trips it serves, in order
    """
    assignments: typing.Dict[typing.Tuple[str, int], str]
    trips: typing.Dict[str, typing.Tuple[CavTrip, ...]]


def schedule_household_cavs(member_plans, cavs, travel_time):
    """
    Assign the trips of a household's members to its CAVs before the day

    Trips are taken in departure order. A CAV can serve a trip if it reaches
    the origin by the planned departure; the one arriving first gets it and
    is then at the destination after the trip.

    Args:
        member_plans (dict): person id -> scenario.Plan
        cavs (list): (CAV id, Point) starting positions
        travel_time (callable): (Point, Point, time) -> seconds

    Returns:
        CavSchedule: the assignment
    """
    trips = []
    for person_id, plan in member_plans.items():
        for index, (a, _, b) in enumerate(plan.trips()):
            trips.append(CavTrip(person_id, index, a.location, b.location,
                                 a.end_time))
    trips.sort(key=lambda trip: (trip.depart, trip.person_id,
                                 trip.trip_index))
    state = {cav_id: (location, 0.0) for cav_id, location in cavs}
    assignments, served = {}, {cav_id: [] for cav_id, _ in cavs}
    for trip in trips:
        options = []
        for cav_id, (location, ready) in state.items():
            reach = ready + travel_time(location, trip.origin, ready)
            if reach <= trip.depart:
                options.append((reach, cav_id))
        if not options:
            continue
        _, cav_id = min(options)
        assignments[trip.key] = cav_id
        served[cav_id].append(trip)
        state[cav_id] = (trip.destination, trip.depart + travel_time(
                trip.origin, trip.destination, trip.depart))
    return CavSchedule(assignments, {c: tuple(t) for c, t in served.items()})


# Transit vehicles


class TransitManager:
    """Loads of every scheduled transit trip"""

    def __init__(self, timetable, vehicle_types, events=None):
        self.timetable = timetable
        self.vehicle_types = vehicle_types
        self.events = events
        self.loads = {}
        self.boardings = 0
        self.denials = 0

    def _vehicle_type(self, trip):
        return self.vehicle_types[trip.vehicle_type_id]

    def board_transit(self, person_id, ride):
        """
        Board a transit vehicle for one ride

        Returns:
            bool: False when the vehicle is full on any segment of the ride
        """
        trip = ride.trip
        load = self.loads.setdefault(
                trip.id, [0] * max(len(trip.stop_times) - 1, 0))
        segments = range(ride.board_index, ride.alight_index)
        capacity = self._vehicle_type(trip).capacity
        if any(load[s] >= capacity for s in segments):
            self.denials += 1
            LOG.info("%s denied boarding on full %s", person_id, trip.id)
            return False
        for s in segments:
            load[s] += 1
        self.boardings += 1
        return True

    def finish_day(self, end_time):
        """Record every scheduled segment with the load it carried"""
        stops = self.timetable.stops
        for trip_id in sorted(self.timetable.trips):
            trip = self.timetable.trips[trip_id]
            vehicle_type = self._vehicle_type(trip)
            fuel = energy.FuelState.from_state_of_charge(vehicle_type)
            load = self.loads.get(trip_id)
            for index, (a, b) in enumerate(zip(trip.stop_times,
                                               trip.stop_times[1:])):
                if b.arrival > end_time:
                    break
                start, end = stops[a.stop_id], stops[b.stop_id]
                leg = routing.ItineraryLeg(
                        modes.LegMode.TRANSIT, trip_id, start, end,
                        a.departure, b.arrival, start.distance_to(end))
                fuel = traverse_leg(self.events, leg, trip_id, vehicle_type,
                                    fuel, load[index] if load else 0,
                                    free_flow_time=leg.duration,
                                    route=trip.route_id)


def traverse_leg(events, leg, vehicle_id, vehicle_type, fuel, passengers,
                 free_flow_time=0.0, **extra):
    """
    Move a vehicle along a leg, draining its fuel

    Running dry is reported with an OutOfFuel event and the leg still
    completes.

    Returns:
        energy.FuelState: levels after the leg
    """
    try:
        after = energy.consume_fuel(fuel, vehicle_type, leg.distance)
    except energy.OutOfFuel as exc:
        after = exc.state
        LOG.warning("vehicle %s ran out of fuel %.0f m short", vehicle_id,
                    exc.missing_meters)
        events.emit(leg.arrive, "OutOfFuel", vehicle=vehicle_id,
                    missingDistance=exc.missing_meters)
    outputs.path_traversal(events, leg, vehicle_id, vehicle_type, passengers,
                           fuel, after, free_flow_time, **extra)
    return after


@dataclasses.dataclass
class TourState:
    """
    * tour_mode: None until fixed by tour choice or the first trip
    * anchor: where the tour starts and ends
    * first, last: trip indices of the tour
    * private_vehicle_id: household car or bike kept for the whole tour
    """
    tour_id: str
    tour_mode: typing.Optional[modes.TourMode]
    anchor: Point
    first: int
    last: int
    private_vehicle_id: typing.Optional[str] = None


_TOUR_MODE_OF = {
    modes.Mode.CAR: modes.TourMode.CAR_BASED,
    modes.Mode.BIKE: modes.TourMode.BIKE_BASED,
}

_SKIPPED = (network.Unreachable, transit.NoService, ridehail.Unavailable,
            parking.NoParking, sharing.DockFull)


class PersonAgent(scheduler.Actor):
    """
    A traveller executing one plan

    Each handler moves the state machine and returns the agent's next
    trigger, except while waiting for a ride-hail vehicle: the fleet
    manager sends that one.
    """

    def __init__(self, person, plan, day):
        super().__init__(person.id)
        self.person = person
        self.plan = plan
        self.day = day
        self.activities = plan.activities
        self.plan_legs = plan.legs
        self.vot = person.value_of_time if person.value_of_time is not None \
            else day.mode_params.default_vot
        self.body_id = f"body-{person.id}"
        self.state = PersonState.PERFORMING_ACTIVITY
        self.location = self.activities[0].location
        self.index = 0
        self.attempt = 0
        self.tour = None
        self.shared = None
        self.shared_offers = {}
        self.itinerary = None
        self.legs = []
        self.request = None
        self.trip_start = 0.0
        self.trip_cost = 0.0
        self.excluded_modes = set()
        self.excluded_trips = set()
        self.executed = list(plan.legs)
        self._tour_ids = itertools.count()

    @property
    def fleet(self):
        return self.day.households[self.person.household_id]

    def move(self, state):
        if state not in TRANSITIONS[self.state]:
            raise IllegalTransition(
                    f"person {self.actor_id} cannot go from "
                    f"{self.state.value} to {state.value}")
        self.state = state
        if state in TERMINAL:
            self.day.done += 1

    def start(self):
        """Begin the day in the first activity"""
        first = self.activities[0]
        self._activity_event(0.0, "ActivityStart", first)
        if len(self.activities) == 1:
            self.move(PersonState.FINISHED)
            return []
        return [scheduler.Trigger(max(first.end_time, 0.0), self.actor_id,
                                  ActivityEndTrigger(0))]

    def handle(self, trigger):
        payload, t = trigger.payload, trigger.time
        if isinstance(payload, ActivityEndTrigger):
            return self.on_activity_end(t)
        if isinstance(payload, LegEndTrigger):
            return self._end_leg(payload.leg_index, t)
        if isinstance(payload, BoardTrigger):
            return self._board(payload.leg_index, t)
        if isinstance(payload, ridehail.RideHailPickup):
            return self._picked_up(payload, t)
        if isinstance(payload, ridehail.RideHailUnavailable):
            return self._not_served(payload, t)
        raise TypeError(f"person {self.actor_id} cannot handle "
                        f"{type(payload).__name__}")

    # Events and helpers

    def _activity_event(self, t, event_type, activity):
        self.day.events.emit(t, event_type, person=self.actor_id,
                             actType=activity.type, x=activity.location.x,
                             y=activity.location.y, taz=activity.taz,
                             activityIndex=self.index)

    def _enter(self, leg, t):
        self.day.events.emit(t, "PersonEntersVehicle", person=self.actor_id,
                             vehicle=leg.vehicle_id or self.body_id,
                             vehicleMode=leg.mode.value)

    def _leave(self, leg, t):
        self.day.events.emit(t, "PersonLeavesVehicle", person=self.actor_id,
                             vehicle=leg.vehicle_id or self.body_id,
                             vehicleMode=leg.mode.value)

    def _pay(self, t, amount, kind):
        if amount <= 0:
            return
        self.day.events.emit(t, "PersonCost", person=self.actor_id,
                             cost=amount, costType=kind)
        self.trip_cost += amount

    def _rng(self, purpose):
        return streams.stream(self.day.seed, purpose, self.day.iteration,
                              self.actor_id, self.index, self.attempt)

    def _household_vehicle(self, vehicle_id):
        if vehicle_id is None:
            return None
        return self.fleet.vehicles.get(vehicle_id)

    def _held_vehicle(self):
        if self.tour is None or self.tour.private_vehicle_id is None:
            return None
        return self.fleet.vehicles[self.tour.private_vehicle_id]

    def _taz(self, point):
        return self.day.network.taz_of(point)

    # Activities and tours

    def on_activity_end(self, t):
        """Leave the current activity and choose how to make the next trip"""
        self._activity_event(t, "ActivityEnd", self.activities[self.index])
        self.move(PersonState.CHOOSING_MODE)
        self.trip_start, self.trip_cost = t, 0.0
        self.attempt = 0
        self.excluded_modes, self.excluded_trips = set(), set()
        if self.tour is None:
            self._start_tour(t)
        return self._choose(t)

    def _start_tour(self, t):
        radius = self.day.access_radius
        anchor = self.location
        last_trip = len(self.activities) - 2
        last = next((j for j in range(self.index, last_trip + 1)
                     if self.activities[j + 1].location.distance_to(anchor)
                     <= radius), last_trip)
        self.tour = TourState(f"{self.actor_id}-{next(self._tour_ids)}",
                              None, anchor, self.index, last)
        if self.day.tour_choice:
            self.tour.tour_mode = self._choose_tour_mode(t)

    def _plausible_modes(self, origin):
        """Modes worth skimming for tour choice"""
        day = self.day
        available = {modes.Mode.WALK}
        if day.timetable is not None:
            available.add(modes.Mode.WALK_TRANSIT)
        radius = day.access_radius
        if self.fleet.nearby(origin, radius, "car"):
            available |= {modes.Mode.CAR, modes.Mode.DRIVE_TRANSIT}
        if self.fleet.nearby(origin, radius, "bike"):
            available.add(modes.Mode.BIKE)
            if day.timetable is not None:
                available.add(modes.Mode.BIKE_TRANSIT)
        if day.ride_hail:
            available |= modes.RIDE_HAIL_MODES
            if day.timetable is not None:
                available.add(modes.Mode.RIDE_HAIL_TRANSIT)
        if any(key[0] == self.actor_id for key in day.cav_assignments):
            available.add(modes.Mode.CAV)
        available |= day.shared_modes
        if day.timetable is None:
            available -= {modes.Mode.DRIVE_TRANSIT}
        return available

    def _choose_tour_mode(self, t):
        day = self.day
        params = day.mode_params
        available = self._plausible_modes(self.location)
        per_trip = []
        for j in range(self.tour.first, self.tour.last + 1):
            a, b = self.activities[j], self.activities[j + 1]
            depart = t if j == self.index else a.end_time
            utilities = {}
            for mode in sorted(available, key=lambda m: m.value):
                entry = day.skims.lookup(mode, a.taz, b.taz, depart)
                utilities[mode] = choice.utility_from_terms(
                        mode, entry.mean_cost, entry.mean_time,
                        entry.mean_transfers, self.vot, params)
            per_trip.append(utilities)
        options = {}
        for tour_mode in modes.TourMode:
            try:
                options[tour_mode] = choice.tour_utility(
                        per_trip, tour_mode, params.epsilon_tour,
                        day.shared_modes)
            except choice.InfeasibleTourMode:
                continue
        tour_mode = choice.mnl_choose(options, params.epsilon_tour,
                                      self._rng("tour"))
        kind = {modes.TourMode.CAR_BASED: "car",
                modes.TourMode.BIKE_BASED: "bike"}.get(tour_mode)
        if kind is not None:
            vehicle = self.fleet.nearby(self.location, day.access_radius,
                                        kind)[0]
            self.fleet.reserve(self.actor_id, vehicle.id)
            self.tour.private_vehicle_id = vehicle.id
        LOG.debug("%s tour %s is %s", self.actor_id, self.tour.tour_id,
                  tour_mode.value)
        return tour_mode

    def _commit_tour(self, itinerary):
        tour = self.tour
        if tour.tour_mode is None:
            tour.tour_mode = _TOUR_MODE_OF.get(itinerary.classification,
                                               modes.TourMode.WALK_BASED)
        if tour.private_vehicle_id is None:
            for leg in itinerary.legs:
                vehicle = self._household_vehicle(leg.vehicle_id)
                if vehicle is not None and self.fleet.kind(vehicle) != "cav":
                    tour.private_vehicle_id = vehicle.id
                    break

    def _end_tour(self):
        if self.tour.private_vehicle_id is not None:
            self.fleet.release(self.tour.private_vehicle_id, self.actor_id)
        if self.shared is not None:
            manager, vehicle_id = self.shared
            manager.return_vehicle(vehicle_id, self.location,
                                   dockless_if_full=True)
            self.shared = None
        self.tour = None

    # Mode choice

    def _allowed(self):
        allowed = set(modes.Mode)
        tour = self.tour
        if self.day.tour_choice and tour.tour_mode is not None:
            first_or_last = self.index in (tour.first, tour.last)
            allowed &= modes.tour_trip_modes(tour.tour_mode, first_or_last,
                                             self.day.shared_modes)
        held = self._held_vehicle()
        if held is not None:
            if self.fleet.kind(held) == "bike":
                allowed &= {modes.Mode.BIKE}
            else:
                allowed &= {modes.Mode.CAR, modes.Mode.DRIVE_TRANSIT}
        if self.shared is not None:
            allowed &= {self.shared[0].mode}
        if self.attempt >= MAX_ATTEMPTS:
            allowed &= {modes.Mode.WALK}
        return allowed - self.excluded_modes

    def _vehicle_near(self, kind, origin):
        """The held vehicle of a kind, else the nearest free one"""
        held = self._held_vehicle()
        if held is not None:
            return held if self.fleet.kind(held) == kind else None
        found = self.fleet.nearby(origin, self.day.access_radius, kind)
        return found[0] if found else None

    def _alternatives(self, destination, t):
        day = self.day
        origin = self.location
        allowed = self._allowed()
        found = {}
        self.shared_offers = {}

        def offer(mode, build):
            if mode not in allowed:
                return
            try:
                itinerary = build()
            except _SKIPPED as exc:
                LOG.debug("%s: no %s (%s)", self.actor_id, mode.value, exc)
                return
            if itinerary is not None:
                found[mode] = itinerary

        dest = destination.location
        radius = day.access_radius
        offer(modes.Mode.WALK, lambda: day.router.walk_itinerary(
                origin, dest, t, self.body_id))

        bike = self._vehicle_near("bike", origin)
        bike_here = bike is not None and \
            bike.serves.distance_to(origin) <= radius
        if bike_here:
            offer(modes.Mode.BIKE, lambda: day.router.bike_itinerary(
                    origin, dest, t, self.body_id, bike.id, bike.location))

        car = self._vehicle_near("car", origin)
        car_here = car is not None and car.serves.distance_to(origin) <= radius
        if car_here:
            links = self.plan_legs[self.index].route \
                if self.attempt == 0 else None
            offer(modes.Mode.CAR, lambda: day.router.build_car_itinerary(
                    origin, dest, t, self.body_id, car.id, car.location,
                    self._parking_quote(car, destination, t), self.vot,
                    links or None))

        cav = self._scheduled_cav(origin)
        if cav is not None:
            offer(modes.Mode.CAV, lambda: day.router.cav_itinerary(
                    origin, dest, max(t, cav.busy_until), self.body_id,
                    cav.id, self.vot))

        if origin.distance_to(dest) >= routing.SAME_PLACE_METERS:
            for pooled in (False, True):
                mode = modes.Mode.RIDE_HAIL_POOLED if pooled \
                    else modes.Mode.RIDE_HAIL
                offer(mode, lambda pooled=pooled: self._ride_hail_itinerary(
                        origin, dest, t, pooled))

        for mode in sorted(day.shared_modes, key=lambda m: m.value):
            offer(mode, lambda mode=mode: self._shared_itinerary(
                    origin, dest, t, mode))

        accesses = [routing.TransitAccess(modes.Mode.WALK_TRANSIT)]
        if bike_here:
            accesses.append(routing.TransitAccess(
                    modes.Mode.BIKE_TRANSIT, bike.id, bike.location))
        if car_here:
            accesses.append(routing.TransitAccess(
                    modes.Mode.DRIVE_TRANSIT, car.id, car.location))
        elif car is not None:
            accesses.append(routing.TransitAccess(
                    modes.Mode.DRIVE_TRANSIT,
                    egress_vehicle=(car.id, car.location)))
        if day.ride_hail:
            accesses.append(routing.TransitAccess(
                    modes.Mode.RIDE_HAIL_TRANSIT, ride_hail=self._hail_quote))
        accesses = [a for a in accesses if a.classification in allowed]
        if accesses and day.timetable is not None:
            try:
                for itinerary in day.router.transit_itineraries(
                        origin, dest, t, accesses, self.vot, day.mode_params,
                        self._rng("transit"), self.body_id,
                        frozenset(self.excluded_trips)):
                    found[itinerary.classification] = itinerary
            except _SKIPPED as exc:
                LOG.debug("%s: no transit (%s)", self.actor_id, exc)

        if not found:
            found[modes.Mode.WALK] = day.router.walk_itinerary(
                    origin, dest, t, self.body_id)
        return found

    def _scheduled_cav(self, origin):
        cav_id = self.day.cav_assignments.get((self.actor_id, self.index))
        if cav_id is None:
            return None
        cav = self.fleet.vehicles[cav_id]
        if cav.holder is not None or \
                cav.location.distance_to(origin) > self.day.access_radius:
            return None
        return cav

    def _quotes(self, origin, destination, t, pooled):
        quotes = []
        for fleet_id in sorted(self.day.ride_hail):
            try:
                quotes.append(self.day.ride_hail[fleet_id].quote(
                        origin, destination, t, pooled))
            except ridehail.Unavailable:
                continue
        return quotes

    def _ride_hail_itinerary(self, origin, destination, t, pooled):
        best, best_utility = None, -math.inf
        for quote in self._quotes(origin, destination, t, pooled):
            itinerary = self.day.router.ride_hail_itinerary(
                    origin, destination, t, self.body_id, quote)
            utility = choice.trip_utility(itinerary, self.vot,
                                          self.day.mode_params)
            if utility > best_utility:
                best, best_utility = itinerary, utility
        return best

    def _hail_quote(self, origin, stop, t):
        quotes = self._quotes(origin, stop, t, False)
        if not quotes:
            return None
        return min(quotes, key=lambda q: (q.wait + q.travel_time, q.price,
                                          q.fleet_id))

    def _shared_itinerary(self, origin, destination, t, mode):
        day = self.day
        best, best_utility = None, -math.inf
        for manager in day.shared:
            if manager.mode is not mode:
                continue
            if self.shared is not None and self.shared[0] is manager:
                vehicle = manager.vehicles[self.shared[1]]
                drop = destination
            else:
                vehicle = manager.find_vehicle(origin, t)
                if vehicle is None:
                    continue
                drop = manager.drop_location(vehicle.id, destination)
            itinerary = day.router.shared_itinerary(
                    origin, destination, t, self.body_id, mode, vehicle.id,
                    vehicle.location, drop, manager.spec.price_per_minute)
            utility = choice.trip_utility(itinerary, self.vot,
                                          day.mode_params)
            if utility > best_utility:
                best, best_utility = itinerary, utility
                self.shared_offers[vehicle.id] = (manager, vehicle)
        return best

    # Parking

    def _expected_stay(self, arrival):
        following = self.activities[self.index + 1]
        if following.end_time is None:
            return max(self.day.end_time - arrival, 0.0)
        return max(following.end_time - arrival, 0.0)

    def _remaining_distance(self):
        locations = [a.location for a in self.activities[self.index:]]
        return sum(a.distance_to(b) for a, b in zip(locations,
                                                    locations[1:]))

    def _overflow(self, destination):
        return parking.StallQuote("overflow", destination.taz,
                                  self.day.parking.max_walk_distance, 0.0)

    def _pick_stall(self, car, destination, arrival):
        day = self.day
        vehicle_type = car.vehicle_type
        stay = self._expected_stay(arrival)
        quotes = day.parking.inquire(destination.location, destination.taz,
                                     vehicle_type.category, arrival, stay)
        agent = choice.ParkingAgent(
                electric=vehicle_type.electric,
                state_of_charge=car.fuel.state_of_charge(vehicle_type),
                capacity=vehicle_type.primary_capacity,
                consumption=vehicle_type.primary_consumption,
                remaining_distance=self._remaining_distance(),
                duration=stay, at_home=destination.type == "home")
        utilities = {i: choice.parking_utility(q, agent, day.parking_params)
                     for i, q in enumerate(quotes)}
        return quotes[choice.mnl_choose(utilities, day.parking_params.epsilon,
                                        self._rng("parking"))]

    def _parking_quote(self, car, destination, t):
        day = self.day
        arrival = t + day.skims.lookup(modes.Mode.CAR, self._taz(car.location),
                                       destination.taz, t).mean_time
        try:
            return self._pick_stall(car, destination, arrival)
        except parking.NoParking:
            return self._overflow(destination)

    def _park(self, vehicle, k, t):
        """Leave a car at the destination of its final drive"""
        day = self.day
        destination = self.activities[self.index + 1]
        planned = self.itinerary.parking
        quote = planned
        if quote is None:
            quote = self._parking_quote_now(vehicle, destination, t)
        reservation = None
        if quote.stall_id != "overflow":
            try:
                reservation = day.parking.claim(quote, vehicle.id, t,
                                                self.actor_id)
            except parking.RaceLost:
                LOG.info("%s lost stall %s", self.actor_id, quote.stall_id)
                try:
                    quote = self._pick_stall(vehicle, destination, t)
                    reservation = day.parking.claim(quote, vehicle.id, t,
                                                    self.actor_id)
                except (parking.NoParking, parking.RaceLost):
                    quote = self._overflow(destination)
        if reservation is None:
            day.events.emit(t, "ReservesParking", vehicle=vehicle.id,
                            driver=self.actor_id, parkingZone=quote.zone,
                            parkingType="overflow", pricingModel="fixed",
                            cost=0.0)
        vehicle.stall = reservation
        vehicle.serves = destination.location
        day.skims.record_parking(destination.taz, t, quote.price,
                                 quote.walk_distance)
        vehicle_type = vehicle.vehicle_type
        if not vehicle_type.electric and vehicle.fuel.state_of_charge(
                vehicle_type) < day.refuel_threshold:
            vehicle.fuel = energy.refill(vehicle.fuel, vehicle_type)
            LOG.debug("%s refuelled", vehicle.id)
        if quote != planned:
            self.legs[k + 1] = day.router.fixed_walk_leg(
                    self.legs[k].end, destination.location, t,
                    quote.walk_distance, self.body_id)

    def _parking_quote_now(self, vehicle, destination, t):
        try:
            return self._pick_stall(vehicle, destination, t)
        except parking.NoParking:
            return self._overflow(destination)

    def _unpark(self, vehicle, t):
        reservation = vehicle.stall
        if reservation is None:
            return
        vehicle.stall = None
        price = self.day.parking.release(reservation, t)
        vehicle_type = vehicle.vehicle_type
        if vehicle_type.electric and reservation.quote.charger_power \
                and t > reservation.start:
            vehicle.fuel, _ = self.day.parking.charge_session(
                    vehicle.id, vehicle_type, vehicle.fuel, reservation,
                    reservation.start, t)
        self._pay(t, price, "parking")

    # Choosing and travelling

    def _choose(self, t):
        day = self.day
        destination = self.activities[self.index + 1]
        alternatives = self._alternatives(destination, t)
        fixed = self.plan_legs[self.index].mode if self.attempt == 0 else None
        if fixed in alternatives:
            mode = fixed
        else:
            utilities = {m: choice.trip_utility(it, self.vot, day.mode_params)
                         for m, it in sorted(alternatives.items(),
                                             key=lambda i: i[0].value)}
            mode = choice.mnl_choose(utilities, day.mode_params.epsilon,
                                     self._rng("mode"))
        itinerary = alternatives[mode]
        try:
            for leg in itinerary.legs:
                if self._household_vehicle(leg.vehicle_id) is not None:
                    self.fleet.reserve(self.actor_id, leg.vehicle_id)
        except Conflict as exc:
            LOG.info("%s: %s", self.actor_id, exc)
            self.excluded_modes.add(mode)
            self.attempt += 1
            self.move(PersonState.CHOOSING_MODE)
            return self._choose(t)

        day.events.emit(
                t, "ModeChoice", person=self.actor_id, mode=mode.value,
                tripIndex=self.index, length=itinerary.distance,
                expectedTime=itinerary.total_time,
                expectedCost=itinerary.total_cost,
                transfers=itinerary.transfers,
                availableAlternatives="|".join(
                    sorted(m.value for m in alternatives)))
        self._commit_tour(itinerary)
        if mode is not modes.Mode.CAV:
            cav_id = day.cav_assignments.get((self.actor_id, self.index))
            if cav_id is not None and \
                    self.fleet.vehicles[cav_id].holder is None:
                day.advance_cav(self.fleet.vehicles[cav_id],
                                (self.actor_id, self.index), t)
        self.itinerary = itinerary
        self.legs = list(itinerary.legs)
        return self._begin_leg(0, t)

    def _retime(self, leg, t):
        if abs(leg.depart - t) < 1e-9:
            return leg
        if leg.mode in (modes.LegMode.CAR, modes.LegMode.CAV) and leg.links:
            try:
                redone = self.day.router.drive_leg(
                        leg.start, leg.end, t, leg.vehicle_id, self.vot,
                        mode=leg.mode, links=leg.links)
                return dataclasses.replace(redone, cost=leg.cost)
            except network.Unreachable:
                pass
        return leg.shifted(t - leg.depart)

    def _begin_leg(self, k, t):
        leg = self.legs[k]
        if leg.mode is modes.LegMode.TRANSIT:
            if t > leg.ride.depart + 1e-6:
                return self._replan(t, f"missed transit vehicle "
                                       f"{leg.vehicle_id}",
                                    trip=leg.vehicle_id)
            self.move(PersonState.WAITING_TO_BOARD)
            return [scheduler.Trigger(leg.ride.depart, self.actor_id,
                                      BoardTrigger(k))]
        if leg.mode is modes.LegMode.RIDE_HAIL:
            return self._hail(k, t)

        vehicle = self._household_vehicle(leg.vehicle_id)
        if vehicle is not None and leg.mode is modes.LegMode.CAV:
            t = max(t, vehicle.busy_until)
        leg = self._retime(leg, t)
        self.legs[k] = leg
        if vehicle is not None:
            self._unpark(vehicle, t)
        elif self.itinerary.shared_vehicle_id is not None and \
                leg.vehicle_id == self.itinerary.shared_vehicle_id:
            try:
                self._take_shared(leg, t)
            except sharing.VehicleTaken as exc:
                return self._replan(t, str(exc),
                                    mode=self.itinerary.classification)
        self._enter(leg, t)
        self.move(PersonState.MOVING)
        return [scheduler.Trigger(leg.arrive, self.actor_id,
                                  LegEndTrigger(k))]

    def _take_shared(self, leg, t):
        if self.shared is not None and self.shared[1] == leg.vehicle_id:
            return
        manager, vehicle = self.shared_offers[leg.vehicle_id]
        manager.take(vehicle, self.actor_id, t)
        self.shared = (manager, vehicle.id)

    def _hail(self, k, t):
        leg = self.legs[k]
        itinerary = self.itinerary
        pooled = itinerary.classification is modes.Mode.RIDE_HAIL_POOLED
        if itinerary.ride_hail is not None:
            manager = self.day.ride_hail[itinerary.ride_hail.fleet_id]
        else:
            quote = self._hail_quote(leg.start, leg.end, t)
            if quote is None:
                return self._replan(t, "ride-hail unavailable",
                                    mode=itinerary.classification)
            manager = self.day.ride_hail[quote.fleet_id]
        request = manager.reserve(self.actor_id, leg.start, leg.end, t,
                                  pooled)
        self.request = (request.id, t, k)
        self.move(PersonState.WAITING_FOR_VEHICLE)
        return []

    def _picked_up(self, payload, t):
        if self.request is None or payload.request_id != self.request[0]:
            LOG.warning("%s ignores stale pickup %s", self.actor_id,
                        payload.request_id)
            return []
        _, requested, k = self.request
        self.request = None
        leg = dataclasses.replace(
                self.legs[k], vehicle_id=payload.vehicle_id,
                depart=payload.pickup_time, arrive=payload.dropoff_time,
                distance=payload.distance)
        self.legs[k] = leg
        self.move(PersonState.MOVING)
        self._enter(leg, t)
        self._pay(t, leg.cost, "ride_hail")
        self.day.skims.record_ride_hail(self._taz(leg.start), requested,
                                        wait=t - requested, price=leg.cost,
                                        distance=leg.distance)
        return [scheduler.Trigger(leg.arrive, self.actor_id,
                                  LegEndTrigger(k))]

    def _not_served(self, payload, t):
        if self.request is None or payload.request_id != self.request[0]:
            return []
        _, requested, k = self.request
        self.request = None
        self.day.skims.record_ride_hail(self._taz(self.legs[k].start),
                                        requested)
        return self._replan(t, payload.reason,
                            mode=self.itinerary.classification)

    def _board(self, k, t):
        leg = self.legs[k]
        if not self.day.transit.board_transit(self.actor_id, leg.ride):
            return self._replan(t, f"transit vehicle {leg.vehicle_id} is full",
                                trip=leg.vehicle_id)
        self.move(PersonState.MOVING)
        self._enter(leg, t)
        self._pay(t, leg.cost, "transit")
        return [scheduler.Trigger(leg.arrive, self.actor_id,
                                  LegEndTrigger(k))]

    def _end_leg(self, k, t):
        leg = self.legs[k]
        day = self.day
        vehicle = self._household_vehicle(leg.vehicle_id)
        if leg.mode is modes.LegMode.WALK:
            if leg.distance > 0:
                traverse_leg(day.events, leg, self.body_id, scen.BODY_TYPE,
                             energy.FuelState(0.0), 1)
        elif leg.mode in (modes.LegMode.BIKE, modes.LegMode.CAR,
                          modes.LegMode.CAV):
            if vehicle is not None:
                vehicle.fuel = day.drive(leg, vehicle.id,
                                         vehicle.vehicle_type, vehicle.fuel, 1)
                vehicle.location = vehicle.serves = leg.end
                vehicle.busy_until = leg.arrive
            elif self.shared is not None:
                self._finish_shared(leg)
            self._pay(t, leg.cost, leg.mode.value)
        self._leave(leg, t)

        if vehicle is not None:
            kind = self.fleet.kind(vehicle)
            if kind == "car" and k == len(self.legs) - 2:
                self._park(vehicle, k, t)
            elif kind == "cav":
                self.fleet.release(vehicle.id, self.actor_id)
                day.advance_cav(vehicle, (self.actor_id, self.index), t)
        self.location = leg.end
        if k + 1 < len(self.legs):
            return self._begin_leg(k + 1, t)
        return self._arrive(t)

    def _finish_shared(self, leg):
        manager, vehicle_id = self.shared
        vehicle_type = self.day.vehicle_types[manager.spec.vehicle_type_id]
        self.day.drive(leg, vehicle_id, vehicle_type,
                       energy.FuelState.from_state_of_charge(vehicle_type), 1)
        vehicle = manager.vehicles[vehicle_id]
        if manager.spec.round_trip and vehicle.pickup is not None and \
                vehicle.pickup.distance_to(leg.end) > self.day.access_radius:
            vehicle.location = leg.end
            return
        manager.return_vehicle(vehicle_id, leg.end, dockless_if_full=True)
        self.shared = None

    def _arrive(self, t):
        day = self.day
        origin = self.activities[self.index]
        destination = self.activities[self.index + 1]
        itinerary = self.itinerary
        day.skims.record(itinerary.classification, origin.taz,
                         destination.taz, self.trip_start,
                         t - self.trip_start, self.trip_cost,
                         sum(leg.distance for leg in self.legs),
                         itinerary.transfers)
        route = ()
        if itinerary.classification is modes.Mode.CAR:
            route = next((leg.links for leg in self.legs
                          if leg.mode is modes.LegMode.CAR), ())
        self.executed[self.index] = dataclasses.replace(
                self.plan_legs[self.index], mode=itinerary.classification,
                route=tuple(route))
        if self.index >= self.tour.last:
            self._end_tour()
        self.index += 1
        self.itinerary, self.legs = None, []
        self.move(PersonState.PERFORMING_ACTIVITY)
        self._activity_event(t, "ActivityStart", destination)
        if self.index == len(self.activities) - 1:
            self.move(PersonState.FINISHED)
            return []
        return [scheduler.Trigger(max(destination.end_time, t), self.actor_id,
                                  ActivityEndTrigger(self.index))]

    def _replan(self, t, reason, mode=None, trip=None):
        self.move(PersonState.REPLANNING)
        self.day.events.emit(t, "Replanning", person=self.actor_id,
                             reason=reason, tripIndex=self.index)
        if mode is not None:
            self.excluded_modes.add(mode)
            if mode in modes.RIDE_HAIL_MODES:
                self.excluded_modes |= modes.RIDE_HAIL_MODES
        if trip is not None:
            self.excluded_trips.add(trip)
        self.attempt += 1
        self.move(PersonState.CHOOSING_MODE)
        return self._choose(t)

    def executed_plan(self):
        """The plan as travelled, with the modes and routes used"""
        elements = []
        for activity, leg in zip(self.activities, self.executed):
            elements += [activity, leg]
        elements.append(self.activities[-1])
        return scen.Plan(tuple(elements), score=self.plan.score,
                         selected=self.plan.selected)


@dataclasses.dataclass
class DayResult:
    """
    * events: the day's event log
    * routes: car-network routes for the traffic simulation
    * plans: person id -> plan as executed
    * states: person id -> final PersonState
    """
    events: outputs.EventLog
    routes: typing.List[physsim.VehicleRoute]
    plans: typing.Dict[str, scen.Plan]
    states: typing.Dict[str, PersonState]

    @property
    def stuck(self):
        return sorted(p for p, s in self.states.items()
                      if s is PersonState.STUCK)


class AgentSim:
    """One simulated day of every person and fleet"""

    def __init__(self, scenario, config, router, skims, iteration=0,
                 plans=None):
        """
        Initialiser

        Args:
            scenario (scenario.Scenario): the population and supply
            config (config.Config): run configuration
            router (router.Router): router on this iteration's travel times
            skims (skims.Skims): tables of the previous iterations; this
                day's observations are recorded into it
            iteration (int): iteration number, part of every random stream
            plans (dict): person id -> plan to execute, the input plans when
                None
        """
        self.scenario = scenario
        self.config = config
        self.router = router
        self.skims = skims
        self.iteration = iteration
        self.plans = plans if plans is not None else {
            pid: person.plan for pid, person in scenario.persons.items()}
        self.seed = int(config["seed"])
        self.end_time = float(config["simulation.endTime"])
        self.network = scenario.network
        self.timetable = scenario.timetable
        self.vehicle_types = scenario.vehicle_types
        self.mode_params = choice.ModeChoiceParams.from_config(config)
        self.parking_params = choice.ParkingChoiceParams.from_config(config)
        self.tour_choice = bool(config["modeChoice.tourModeChoiceEnabled"])
        self.access_radius = float(
                config["agents.householdVehicles.accessRadiusMeters"])
        self.cav_level = int(config["agents.householdVehicles.cavAutomationLevel"])
        self.refuel_threshold = float(
                config["agents.householdVehicles.refuelThresholdFraction"])
        self.cacc_level = int(config["physsim.caccAutomationLevel"])

        self.events = outputs.EventLog(self.end_time)
        self.routes = []
        self.done = 0
        self.persons = {}
        self.scheduler = scheduler.Scheduler(
                window_size=float(config["simulation.windowSize"]))
        self.parking = parking.make_manager(
                config["parking.managerType"], scenario.parking, self.network,
                self.events, float(config["parking.maxWalkDistanceMeters"]))
        self.transit = TransitManager(self.timetable, self.vehicle_types,
                                      self.events) \
            if self.timetable is not None else None
        self.households = self._household_vehicles()
        self.cav_assignments = self._schedule_cavs()
        self._fleet_types = {}
        self.ride_hail = self._ride_hail_managers()
        self.shared = self._shared_managers()
        self.shared_modes = frozenset(m.mode for m in self.shared)

    # Estimates handed to the managers

    def estimate(self, start, end, t, mode=modes.Mode.CAR):
        """Skim-based (seconds, meters) between two points"""
        meters = start.distance_to(end)
        speed = self.skims.speed(mode, self.network.taz_of(start),
                                 self.network.taz_of(end), t)
        return meters / speed, meters

    def free_flow(self, links):
        return sum(self.network.links[l].free_flow_time for l in links)

    def _skim_wait(self, point, t):
        entry = self.skims.lookup_ride_hail(self.network.taz_of(point), t)
        if entry is None or math.isnan(entry.mean_wait):
            return None
        return entry.mean_wait

    def _day_over(self):
        return self.done >= len(self.persons)

    def drive(self, leg, vehicle_id, vehicle_type, fuel, passengers,
              **extra):
        """Record a vehicle leg and hand car-network paths to physsim"""
        after = traverse_leg(self.events, leg, vehicle_id, vehicle_type, fuel,
                             passengers, self.free_flow(leg.links), **extra)
        if leg.links and leg.mode.network_mode == "car":
            self.routes.append(physsim.VehicleRoute(
                    vehicle_id, tuple(leg.links), leg.depart,
                    cacc=vehicle_type.automation_level >= self.cacc_level,
                    heavy_duty=vehicle_type.heavy_duty))
        return after

    def _ride_hail_drive(self, vehicle_id, start, end, depart):
        leg = self.router.drive_leg(start, end, depart, vehicle_id,
                                    mode=modes.LegMode.RIDE_HAIL)
        vehicle_type = self._fleet_types[vehicle_id]
        if leg.links:
            self.routes.append(physsim.VehicleRoute(
                    vehicle_id, tuple(leg.links), depart,
                    cacc=vehicle_type.automation_level >= self.cacc_level,
                    heavy_duty=vehicle_type.heavy_duty, stops=True))
        return leg

    # Setup

    def _household_vehicles(self):
        fleets = {}
        for household in self.scenario.households.values():
            vehicles = []
            for vehicle_id in household.vehicle_ids:
                record = self.scenario.vehicles[vehicle_id]
                vehicle_type = self.vehicle_types[record.type_id]
                vehicles.append(HouseholdVehicle(
                        vehicle_id, vehicle_type, household.home,
                        energy.FuelState.from_state_of_charge(
                            vehicle_type, record.state_of_charge),
                        household.home))
            fleets[household.id] = HouseholdVehicles(household.id, vehicles,
                                                     self.cav_level)
        return fleets

    def _schedule_cavs(self):
        assignments = {}

        def travel_time(start, end, t):
            return self.estimate(start, end, t, modes.Mode.CAV)[0]

        for household_id in sorted(self.households):
            fleet = self.households[household_id]
            cavs = sorted((v for v in fleet.vehicles.values()
                           if fleet.kind(v) == "cav"), key=lambda v: v.id)
            if not cavs:
                continue
            members = self.scenario.households[household_id].member_ids
            schedule = schedule_household_cavs(
                    {pid: self.plans[pid] for pid in members
                     if pid in self.plans},
                    [(v.id, v.location) for v in cavs], travel_time)
            assignments.update(schedule.assignments)
            for cav in cavs:
                cav.pending = list(schedule.trips.get(cav.id, ()))
        return assignments

    def _ride_hail_managers(self):
        config = self.config
        matching = ridehail.MatchingParams.from_config(config)
        pricing = {False: ridehail.Pricing.from_config(config, False),
                   True: ridehail.Pricing.from_config(config, True)}
        default_strategy = config["agents.rideHail.repositioningManager.name"]
        centroids = self.network.taz_centroids
        depots = sorted({self.network.tazs[d.zone].centroid
                         for d in self.scenario.parking
                         if d.charger_power and d.zone in self.network.tazs})
        managers = {}
        for spec in self.scenario.ridehail_fleets:
            vehicles = []
            for record in self.scenario.ridehail_vehicles:
                if record.fleet_id != spec.id:
                    continue
                vehicle_type = self.vehicle_types[record.type_id]
                self._fleet_types[record.id] = vehicle_type
                vehicles.append(ridehail.FleetVehicleState(
                        record.id, vehicle_type, record.location,
                        energy.FuelState.from_state_of_charge(
                            vehicle_type, record.state_of_charge),
                        shift=record.shift, geofence=record.geofence,
                        autonomous=vehicle_type.automation_level
                        >= self.cav_level))
            managers[spec.id] = ridehail.RideHailManager(
                    spec.id, vehicles, matching, pricing,
                    estimate=lambda a, b, t: self.estimate(
                        a, b, t, modes.Mode.RIDE_HAIL),
                    drive=self._ride_hail_drive,
                    events=self.events,
                    strategy=ridehail.Strategy(
                        str(spec.repositioning or default_strategy).upper()),
                    taz_of=self.network.taz_of,
                    centroids=centroids,
                    wait_estimate=self._skim_wait,
                    dispatch_interval=float(
                        config["agents.rideHail.dispatchIntervalSec"]),
                    reposition_interval=float(config[
                        "agents.rideHail.repositioningManager.intervalSec"]),
                    demand_window=float(config[
                        "agents.rideHail.repositioningManager."
                        "demandWindowSec"]),
                    min_distance=float(config[
                        "agents.rideHail.repositioningManager."
                        "minDistanceMeters"]),
                    refuel_threshold=float(
                        config["agents.rideHail.refuelThresholdFraction"]),
                    depots=depots,
                    depot_power=float(
                        config["agents.rideHail.depotChargingPowerKw"]),
                    end_time=self.end_time,
                    day_over=self._day_over,
                    free_flow=self.free_flow)
        return managers

    def _shared_managers(self):
        homes = [h.home for _, h in sorted(self.scenario.households.items())]
        centroids = self.network.taz_centroids
        managers = []
        for spec in self.scenario.shared_fleets:
            vehicles = sharing.init_fleet(
                    spec, homes, centroids,
                    streams.stream(self.seed, "sharing", self.iteration,
                                   spec.id))
            managers.append(sharing.SharedFleetManager(spec, vehicles))
        return managers

    # CAVs

    def _move_cav(self, cav, target, depart):
        try:
            leg = self.router.drive_leg(cav.location, target, depart, cav.id,
                                        mode=modes.LegMode.CAV)
        except network.Unreachable as exc:
            LOG.warning("CAV %s cannot reposition: %s", cav.id, exc)
            return
        if leg.arrive > self.end_time:
            return
        cav.fuel = self.drive(leg, cav.id, cav.vehicle_type, cav.fuel, 0)
        cav.location = cav.serves = target
        cav.busy_until = leg.arrive

    def advance_cav(self, cav, served_key, t):
        """Drop a served or abandoned trip and head to the next pickup"""
        keys = [trip.key for trip in cav.pending]
        if served_key in keys:
            cav.pending = cav.pending[keys.index(served_key) + 1:]
        if not cav.pending:
            return
        following = cav.pending[0]
        if cav.location.distance_to(following.origin) >= \
                routing.SAME_PLACE_METERS:
            self._move_cav(cav, following.origin, max(t, cav.busy_until))

    def _position_cavs(self):
        for fleet in self.households.values():
            for cav in fleet.vehicles.values():
                if not cav.pending:
                    continue
                first = cav.pending[0]
                if cav.location.distance_to(first.origin) < \
                        routing.SAME_PLACE_METERS:
                    continue
                seconds, _ = self.estimate(cav.location, first.origin,
                                           first.depart, modes.Mode.CAV)
                self._move_cav(cav, first.origin,
                               max(0.0, first.depart - seconds))

    # The day

    def _close_parking(self):
        for household_id in sorted(self.households):
            for vehicle in self.households[household_id].vehicles.values():
                reservation = vehicle.stall
                if reservation is None:
                    continue
                vehicle.stall = None
                self.parking.release(reservation, self.end_time)
                if vehicle.vehicle_type.electric and \
                        reservation.quote.charger_power and \
                        self.end_time > reservation.start:
                    vehicle.fuel, _ = self.parking.charge_session(
                            vehicle.id, vehicle.vehicle_type, vehicle.fuel,
                            reservation, reservation.start, self.end_time)

    def run(self):
        """
        Simulate the day

        Returns:
            DayResult: events, routes, executed plans and final states

        Raises:
            scheduler.SchedulerStuck: triggers stayed open past the timeout
        """
        triggers = []
        for fleet_id in sorted(self.ride_hail):
            manager = self.scheduler.register(self.ride_hail[fleet_id])
            triggers.append(manager.first_trigger())
        for person_id in sorted(self.plans):
            agent = PersonAgent(self.scenario.persons[person_id],
                                self.plans[person_id], self)
            self.persons[person_id] = self.scheduler.register(agent)
        for person_id in sorted(self.persons):
            triggers.extend(self.persons[person_id].start())
        self._position_cavs()
        for trigger in triggers:
            self.scheduler.schedule_trigger(trigger)

        handled = self.scheduler.run(
                until=self.end_time,
                stuck_timeout=float(self.config["simulation.stuckTimeoutSeconds"]))

        stuck = 0
        for agent in self.persons.values():
            if agent.state not in TERMINAL:
                agent.move(PersonState.STUCK)
                stuck += 1
        if stuck:
            LOG.warning("iteration %d: %d persons did not finish their day",
                        self.iteration, stuck)
        if self.transit is not None:
            self.transit.finish_day(self.end_time)
        self._close_parking()
        LOG.info("iteration %d: %d triggers handled, %d events",
                 self.iteration, handled, len(self.events))
        return DayResult(
                self.events, self.routes,
                {pid: a.executed_plan() for pid, a in self.persons.items()},
                {pid: a.state for pid, a in self.persons.items()})
