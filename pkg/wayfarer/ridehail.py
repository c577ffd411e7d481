"""Ride-hail fleets: quotes, matching, repositioning and the fleet manager"""
import dataclasses
import enum
import itertools
import logging
import typing

import pandas as pd

from . import energy
from . import errors
from . import outputs
from . import parking
from . import scheduler
from .geometry import Point

LOG = logging.getLogger(__name__)

METERS_PER_MILE = 1609.344


class Unavailable(errors.WayfarerError):
    """No vehicle on shift can serve the request"""


class RequestKind(enum.Enum):
    INQUIRY = "inquiry"
    RESERVATION = "reservation"


class VehicleStatus(enum.Enum):
    IDLE = "idle"
    ENROUTE_PICKUP = "enroutePickup"
    OCCUPIED = "occupied"
    REPOSITIONING = "repositioning"
    REFUELING = "refueling"
    OFF_SHIFT = "offShift"


BUSY = frozenset({VehicleStatus.ENROUTE_PICKUP, VehicleStatus.OCCUPIED,
                  VehicleStatus.REPOSITIONING, VehicleStatus.REFUELING})


class Strategy(enum.Enum):
    DEFAULT = "DEFAULT"
    DEMAND_FOLLOWING = "DEMAND_FOLLOWING"
    INVERSE_SQUARE_DISTANCE = "INVERSE_SQUARE_DISTANCE"


@dataclasses.dataclass(frozen=True)
class RideRequest:
    id: str
    person_id: str
    origin: Point
    destination: Point
    request_time: float
    kind: RequestKind = RequestKind.RESERVATION
    pooled: bool = False

    def __post_init__(self):
        if self.origin == self.destination:
            raise ValueError(f"request {self.id} has identical endpoints")


@dataclasses.dataclass(frozen=True)
class MatchingParams:
    """
    Matching constraints

    * max_waiting_time: seconds from request to pickup
    * max_excess_ride_time: allowed in-vehicle time above the direct time,
      as a fraction of the direct time
    * max_requests_per_vehicle: requests a vehicle considers per cycle
    * search_radius: meters from a vehicle to a pickup
    """
    max_waiting_time: float = 900.0
    max_excess_ride_time: float = 0.5
    max_requests_per_vehicle: int = 4
    search_radius: float = 5000.0

    def __post_init__(self):
        if min(self.max_waiting_time, self.max_excess_ride_time,
               self.max_requests_per_vehicle, self.search_radius) <= 0:
            raise ValueError("matching parameters must be positive")

    @classmethod
    def from_config(cls, config):
        return cls(
                max_waiting_time=float(
                    config["agents.rideHail.maxWaitingTimeInSec"]),
                max_excess_ride_time=float(
                    config["agents.rideHail.maxExcessRideTime"]),
                max_requests_per_vehicle=int(
                    config["agents.rideHail.maxRequestsPerVehicle"]),
                search_radius=float(
                    config["agents.rideHail.rideHailManager.radiusInMeters"]))


@dataclasses.dataclass(frozen=True)
class Pricing:
    base: float
    per_mile: float
    per_minute: float

    def price(self, meters, seconds):
        return (self.base + self.per_mile * meters / METERS_PER_MILE
                + self.per_minute * seconds / 60.0)

    @classmethod
    def from_config(cls, config, pooled):
        prefix = "pooled" if pooled else "default"
        return cls(float(config[f"agents.rideHail.{prefix}BaseCost"]),
                   float(config[f"agents.rideHail.{prefix}CostPerMile"]),
                   float(config[f"agents.rideHail.{prefix}CostPerMinute"]))


@dataclasses.dataclass(frozen=True)
class Quote:
    """Answer to an inquiry"""
    fleet_id: str
    wait: float
    price: float
    travel_time: float
    distance: float
    pooled: bool = False


@dataclasses.dataclass
class FleetVehicleState:
    """
    Live state of one fleet vehicle

    * busy_until: when the current job (ride, move or charge) ends
    * autonomous: ignores shifts and is sent to depots to charge
    """
    vehicle_id: str
    vehicle_type: typing.Any
    location: Point
    fuel: energy.FuelState
    shift: typing.Optional[typing.Tuple[float, float]] = None
    geofence: typing.Any = None
    status: VehicleStatus = VehicleStatus.IDLE
    occupants: typing.List[str] = dataclasses.field(default_factory=list)
    busy_until: float = 0.0
    autonomous: bool = False

    @property
    def seats(self):
        return self.vehicle_type.seating_capacity

    def on_shift(self, clock):
        if self.autonomous or self.shift is None:
            return True
        start, end = self.shift
        return start <= clock < end

    def serves(self, request):
        if self.geofence is None:
            return True
        return self.geofence.contains(request.origin) and \
            self.geofence.contains(request.destination)


@dataclasses.dataclass(frozen=True)
class Stop:
    request_id: str
    pickup: bool
    location: Point
    time: float


@dataclasses.dataclass(frozen=True)
class Assignment:
    """A vehicle and the ordered pickups and dropoffs it will make"""
    vehicle_id: str
    requests: typing.Tuple[RideRequest, ...]
    stops: typing.Tuple[Stop, ...]

    def pickup_time(self, request_id):
        return next(s.time for s in self.stops
                    if s.request_id == request_id and s.pickup)

    def dropoff_time(self, request_id):
        return next(s.time for s in self.stops
                    if s.request_id == request_id and not s.pickup)


@dataclasses.dataclass(frozen=True)
class MoveOrder:
    vehicle_id: str
    taz_id: str
    destination: Point


def timed_stops(start, start_time, order, travel_time):
    """
    Time a sequence of pickups and dropoffs

    Args:
        start (Point): vehicle location
        start_time (float): when the vehicle sets off
        order (list of (RideRequest, bool)): requests with True for pickup
        travel_time (callable): (Point, Point) -> seconds

    Returns:
        list of Stop
    """
    stops = []
    here, t = start, start_time
    for request, pickup in order:
        there = request.origin if pickup else request.destination
        t += travel_time(here, there)
        stops.append(Stop(request.id, pickup, there, t))
        here = there
    return stops


def feasible(stops, requests, params, travel_time, seats):
    """
    Check every passenger's wait and ride time and the seat count

    Args:
        stops (list of Stop): timed stops
        requests (dict): request id -> RideRequest
        params (MatchingParams): the constraints
        travel_time (callable): (Point, Point) -> seconds
        seats (int): seating capacity

    Returns:
        bool: True if every constraint holds
    """
    picked = {}
    load = 0
    for stop in stops:
        request = requests[stop.request_id]
        if stop.pickup:
            if stop.time - request.request_time > params.max_waiting_time:
                return False
            picked[stop.request_id] = stop.time
            load += 1
            if load > seats:
                return False
        else:
            if stop.request_id not in picked:
                return False
            direct = travel_time(request.origin, request.destination)
            onboard = stop.time - picked[stop.request_id]
            if onboard > (1.0 + params.max_excess_ride_time) * direct + 1e-9:
                return False
            load -= 1
    return True


def _eligible(vehicle, request, clock, params, travel_time):
    return (vehicle.status is VehicleStatus.IDLE
            and vehicle.on_shift(clock)
            and vehicle.serves(request)
            and vehicle.location.distance_to(request.origin)
            <= params.search_radius)


def _insert(order, request, vehicle, clock, params, travel_time, requests):
    best = None
    for i in range(len(order) + 1):
        for j in range(i, len(order) + 1):
            candidate = list(order)
            candidate.insert(i, (request, True))
            candidate.insert(j + 1, (request, False))
            stops = timed_stops(vehicle.location, clock, candidate,
                                travel_time)
            if not feasible(stops, requests, params, travel_time,
                            vehicle.seats):
                continue
            if best is None or stops[-1].time < best[0]:
                best = (stops[-1].time, candidate)
    return None if best is None else best[1]


def match_pooled(requests, vehicles, params, travel_time, clock):
    """
    Vehicle-centric greedy pooling

    Vehicles are taken in id order; each looks at its nearest unassigned
    requests and inserts them one by one where every passenger's constraints
    still hold.

    Args:
        requests (iterable of RideRequest): pooled reservations of the cycle
        vehicles (iterable of FleetVehicleState): the fleet
        params (MatchingParams): constraints
        travel_time (callable): (Point, Point) -> seconds
        clock (float): dispatch time

    Returns:
        list of Assignment
    """
    pending = {r.id: r for r in requests}
    by_id = dict(pending)
    assignments = []
    for vehicle in sorted(vehicles, key=lambda v: v.vehicle_id):
        candidates = sorted(
                (r for r in pending.values()
                 if _eligible(vehicle, r, clock, params, travel_time)),
                key=lambda r: (travel_time(vehicle.location, r.origin), r.id))
        order = []
        taken = []
        for request in candidates[:params.max_requests_per_vehicle]:
            inserted = _insert(order, request, vehicle, clock, params,
                               travel_time, by_id)
            if inserted is not None:
                order = inserted
                taken.append(request)
        if taken:
            for request in taken:
                del pending[request.id]
            assignments.append(Assignment(
                    vehicle.vehicle_id, tuple(taken),
                    tuple(timed_stops(vehicle.location, clock, order,
                                      travel_time))))
    return assignments


def match_solo(requests, vehicles, params, travel_time, clock):
    """
    Nearest idle vehicle for each request, earliest request first

    Returns:
        typing.Tuple[list, list]: assignments and unmatched requests
    """
    free = {v.vehicle_id: v for v in vehicles}
    assignments, unmatched = [], []
    for request in sorted(requests, key=lambda r: (r.request_time, r.id)):
        options = [(travel_time(v.location, request.origin), v.vehicle_id)
                   for v in free.values()
                   if _eligible(v, request, clock, params, travel_time)]
        if not options:
            unmatched.append(request)
            continue
        _, vehicle_id = min(options)
        vehicle = free.pop(vehicle_id)
        stops = timed_stops(vehicle.location, clock,
                            [(request, True), (request, False)], travel_time)
        assignments.append(Assignment(vehicle_id, (request,), tuple(stops)))
    return assignments, unmatched


def _orders(requests):
    """Every stop order with each pickup before its dropoff"""
    def extend(order, waiting, riding):
        if not waiting and not riding:
            yield list(order)
            return
        for request in sorted(waiting, key=lambda r: r.id):
            order.append((request, True))
            yield from extend(order, waiting - {request}, riding | {request})
            order.pop()
        for request in sorted(riding, key=lambda r: r.id):
            order.append((request, False))
            yield from extend(order, waiting, riding - {request})
            order.pop()
    yield from extend([], frozenset(requests), frozenset())


def exhaustive_match(requests, vehicles, params, travel_time, clock):
    """
    Optimal assignment by enumeration, for small instances only

    Maximizes matched requests, then minimizes total pickup delay.

    Returns:
        list of Assignment
    """
    requests = sorted(requests, key=lambda r: r.id)
    vehicles = sorted(vehicles, key=lambda v: v.vehicle_id)
    if len(requests) > 6 or len(vehicles) > 3:
        raise ValueError("instance too large for exhaustive matching")
    by_id = {r.id: r for r in requests}
    cache = {}

    def best_schedule(vehicle, subset):
        key = (vehicle.vehicle_id, subset)
        if key not in cache:
            found = None
            chosen = [by_id[i] for i in subset]
            if len(chosen) <= params.max_requests_per_vehicle and all(
                    _eligible(vehicle, r, clock, params, travel_time)
                    for r in chosen):
                for order in _orders(chosen):
                    stops = timed_stops(vehicle.location, clock, order,
                                        travel_time)
                    if not feasible(stops, by_id, params, travel_time,
                                    vehicle.seats):
                        continue
                    delay = sum(s.time - by_id[s.request_id].request_time
                                for s in stops if s.pickup)
                    if found is None or delay < found[0]:
                        found = (delay, tuple(stops))
            cache[key] = found
        return cache[key]

    best = (0, 0.0, [])
    for choice in itertools.product(range(len(vehicles) + 1),
                                    repeat=len(requests)):
        groups = {}
        for request, slot in zip(requests, choice):
            if slot < len(vehicles):
                groups.setdefault(slot, []).append(request.id)
        plan, matched, delay = [], 0, 0.0
        for slot, ids in groups.items():
            schedule = best_schedule(vehicles[slot], frozenset(ids))
            if schedule is None:
                break
            matched += len(ids)
            delay += schedule[0]
            plan.append(Assignment(vehicles[slot].vehicle_id,
                                   tuple(by_id[i] for i in sorted(ids)),
                                   schedule[1]))
        else:
            if matched > best[0] or (matched == best[0] and matched
                                     and delay < best[1]):
                best = (matched, delay, plan)
    return sorted(best[2], key=lambda a: a.vehicle_id)


def reposition(strategy, idle_vehicles, demand, taz_of, centroids,
               min_distance=100.0):
    """
    Move idle vehicles toward zones where demand exceeds idle supply

    Args:
        strategy (Strategy): repositioning strategy
        idle_vehicles (list of (vehicle id, Point)): idle vehicles
        demand (dict): TAZ id -> recent request count
        taz_of (callable): Point -> TAZ id
        centroids (dict): TAZ id -> Point
        min_distance (float): floor on the distance in inverse-square scores

    Returns:
        list of MoveOrder
    """
    strategy = Strategy(strategy.value if isinstance(strategy, Strategy)
                        else str(strategy).upper())
    if strategy is Strategy.DEFAULT or not idle_vehicles:
        return []
    zone_of = {vid: taz_of(location) for vid, location in idle_vehicles}
    supply = {}
    for zone in zone_of.values():
        supply[zone] = supply.get(zone, 0) + 1
    deficit = {zone: count - supply.get(zone, 0)
               for zone, count in demand.items()
               if count - supply.get(zone, 0) > 0}
    movable = {vid: location for vid, location in sorted(idle_vehicles)
               if zone_of[vid] not in deficit}
    orders = []
    if strategy is Strategy.DEMAND_FOLLOWING:
        for zone in sorted(deficit, key=lambda z: (-deficit[z], z)):
            target = centroids[zone]
            for _ in range(deficit[zone]):
                if not movable:
                    return orders
                vid = min(movable, key=lambda v: (
                        movable[v].distance_to(target), v))
                del movable[vid]
                orders.append(MoveOrder(vid, zone, target))
        return orders
    while movable and deficit:
        score, vid, zone = max(
                (deficit[z] / max(loc.distance_to(centroids[z]),
                                  min_distance) ** 2, v, z)
                for v, loc in sorted(movable.items())
                for z in sorted(deficit))
        del movable[vid]
        orders.append(MoveOrder(vid, zone, centroids[zone]))
        deficit[zone] -= 1
        if deficit[zone] <= 0:
            del deficit[zone]
        if score <= 0:
            break
    return orders


def manage_shift(vehicle, clock, refuel_threshold=0.2):
    """
    Bring a vehicle's status up to date at a dispatch instant

    Returns:
        VehicleStatus: the new status; REFUELING for an idle vehicle whose
        charge fell below the threshold, which the manager must act on
    """
    if vehicle.status in BUSY and vehicle.busy_until > clock:
        return vehicle.status
    status = VehicleStatus.IDLE
    if not vehicle.on_shift(clock):
        status = VehicleStatus.OFF_SHIFT
    elif vehicle.vehicle_type.primary_capacity and \
            vehicle.fuel.state_of_charge(vehicle.vehicle_type) \
            < refuel_threshold:
        status = VehicleStatus.REFUELING
    vehicle.status = status
    return status


@dataclasses.dataclass(frozen=True)
class AccountSummary:
    """
    * per_vehicle: vehicle, deadhead_m, passenger_m
    * requests: ride-hail mode choices
    * unmatched: requests that ended in replanning
    * mean_wait: seconds from mode choice to boarding
    """
    per_vehicle: pd.DataFrame
    requests: int
    unmatched: int
    mean_wait: float

    @property
    def unmatched_rate(self):
        return self.unmatched / self.requests if self.requests else 0.0


def account(events):
    """
    Deadhead and passenger distance per vehicle, unmatched rate, mean wait

    Args:
        events (pandas.DataFrame): the day's event log

    Returns:
        AccountSummary
    """
    traversals = events[(events["type"] == "PathTraversal")
                        & (outputs.column(events, "mode") == "ride_hail")]
    passengers = outputs.numeric(traversals, "numPassengers")
    length = outputs.numeric(traversals, "length")
    per_vehicle = pd.DataFrame({
        "vehicle": outputs.column(traversals, "vehicle"),
        "deadhead_m": length.where(passengers == 0, 0.0),
        "passenger_m": length.where(passengers > 0, 0.0),
    }).groupby("vehicle", as_index=False).sum().sort_values("vehicle")

    requests, unmatched, mean_wait = outputs.ride_hail_service(events)
    return AccountSummary(per_vehicle.reset_index(drop=True), requests,
                          unmatched, mean_wait)


# Manager payloads


@dataclasses.dataclass(frozen=True)
class Dispatch:
    """Run one matching cycle"""


@dataclasses.dataclass(frozen=True)
class RideHailPickup:
    """Sent to a passenger when the vehicle reaches them"""
    request_id: str
    vehicle_id: str
    vehicle_type_id: str
    pickup_time: float
    dropoff_time: float
    distance: float


@dataclasses.dataclass(frozen=True)
class RideHailUnavailable:
    """Sent to a passenger whose request could not be served"""
    request_id: str
    reason: str


class RideHailManager(scheduler.Actor):
    """
    One ride-hail provider

    Quotes are answered synchronously. Reservations wait for the next
    dispatch cycle, where pooled requests are matched first and the rest go
    to the nearest idle vehicle.
    """

    def __init__(self, fleet_id, vehicles, params, pricing, estimate, drive,
                 events, strategy=Strategy.DEFAULT, taz_of=None,
                 centroids=None, wait_estimate=None, dispatch_interval=30.0,
                 reposition_interval=300.0, demand_window=900.0,
                 min_distance=100.0, refuel_threshold=0.2, depots=(),
                 depot_power=50.0, end_time=108000.0, day_over=None,
                 free_flow=None):
        """
        Initialiser

        Args:
            fleet_id (str): provider id
            vehicles (list of FleetVehicleState): the fleet
            params (MatchingParams): matching constraints
            pricing (dict): pooled flag -> Pricing
            estimate (callable): (Point, Point, time) -> (seconds, meters),
                skim-based travel estimate
            drive (callable): (vehicle id, Point, Point, depart) ->
                router.ItineraryLeg actually driven
            events (outputs.EventLog): event sink
            strategy (Strategy): repositioning strategy
            taz_of (callable): Point -> TAZ id
            centroids (dict): TAZ id -> Point
            wait_estimate (callable): (Point, time) -> seconds or None, from
                the ride-hail skim
            dispatch_interval (float): seconds between matching cycles
            reposition_interval (float): seconds between repositionings
            demand_window (float): trailing seconds of demand considered
            min_distance (float): inverse-square distance floor
            refuel_threshold (float): state of charge triggering a charge
            depots (sequence of Point): charging depots of autonomous vehicles
            depot_power (float): kW at depots
            end_time (float): no dispatch is scheduled after this
            day_over (callable): () -> True once nobody can still request
            free_flow (callable): link ids -> uncongested seconds
        """
        super().__init__(f"rideHail:{fleet_id}")
        self.fleet_id = fleet_id
        self.vehicles = {v.vehicle_id: v for v in vehicles}
        self.params = params
        self.pricing = pricing
        self.estimate = estimate
        self.drive = drive
        self.events = events
        self.strategy = strategy
        self.taz_of = taz_of
        self.centroids = centroids or {}
        self.wait_estimate = wait_estimate
        self.dispatch_interval = dispatch_interval
        self.reposition_interval = reposition_interval
        self.demand_window = demand_window
        self.min_distance = min_distance
        self.refuel_threshold = refuel_threshold
        self.depots = tuple(depots)
        self.depot_power = depot_power
        self.end_time = end_time
        self.day_over = day_over or (lambda: False)
        self.free_flow = free_flow or (lambda links: 0.0)
        self.pending = {}
        self.recent = []
        self._next_reposition = 0.0
        self._ids = itertools.count()

    def first_trigger(self, start=0.0):
        return scheduler.Trigger(start, self.actor_id, Dispatch())

    def _travel_time(self, clock):
        def travel_time(a, b):
            return self.estimate(a, b, clock)[0]
        return travel_time

    def quote(self, origin, destination, clock, pooled=False):
        """
        Estimate wait and price for a ride

        Raises:
            Unavailable: no vehicle on shift can serve the trip
        """
        if origin.distance_to(destination) < 1.0:
            raise Unavailable("pickup and dropoff are the same place")
        inquiry = RideRequest("inquiry", "", origin, destination, clock,
                              RequestKind.INQUIRY, pooled)
        candidates = [v for v in self.vehicles.values()
                      if v.status is not VehicleStatus.OFF_SHIFT
                      and v.on_shift(clock) and v.serves(inquiry)
                      and v.location.distance_to(origin)
                      <= self.params.search_radius]
        if not candidates:
            raise Unavailable(f"fleet {self.fleet_id} has no vehicle near "
                              f"({origin.x:g}, {origin.y:g})")
        wait = self.wait_estimate(origin, clock) if self.wait_estimate \
            else None
        if wait is None:
            idle = [v for v in candidates if v.status is VehicleStatus.IDLE]
            if not idle:
                raise Unavailable(f"fleet {self.fleet_id} has no idle vehicle")
            wait = min(self.estimate(v.location, origin, clock)[0]
                       for v in idle) + self.dispatch_interval / 2.0
        seconds, meters = self.estimate(origin, destination, clock)
        if pooled:
            seconds *= 1.0 + self.params.max_excess_ride_time / 2.0
        return Quote(self.fleet_id, wait,
                     self.pricing[pooled].price(meters, seconds), seconds,
                     meters, pooled)

    def reserve(self, person_id, origin, destination, clock, pooled=False):
        """Queue a reservation for the next dispatch cycle"""
        request = RideRequest(f"{self.fleet_id}-{next(self._ids)}", person_id,
                              origin, destination, clock,
                              RequestKind.RESERVATION, pooled)
        self.pending[request.id] = request
        if self.taz_of is not None:
            self.recent.append((clock, self.taz_of(origin)))
        return request

    def handle(self, trigger):
        clock = trigger.time
        spawned = []
        for vehicle in sorted(self.vehicles.values(),
                              key=lambda v: v.vehicle_id):
            if manage_shift(vehicle, clock, self.refuel_threshold) \
                    is VehicleStatus.REFUELING:
                self._refuel(vehicle, clock)

        for request in sorted(self.pending.values(),
                              key=lambda r: (r.request_time, r.id)):
            if clock - request.request_time > self.params.max_waiting_time:
                del self.pending[request.id]
                spawned.append(self._unavailable(
                        request, clock, "ride-hail request expired"))

        travel_time = self._travel_time(clock)
        idle = [v for v in self.vehicles.values()
                if v.status is VehicleStatus.IDLE]
        pooled = [r for r in self.pending.values() if r.pooled]
        assignments = match_pooled(pooled, idle, self.params, travel_time,
                                   clock)
        used = {a.vehicle_id for a in assignments}
        matched = {r.id for a in assignments for r in a.requests}
        rest = [r for r in self.pending.values() if r.id not in matched]
        solo, _ = match_solo(rest, [v for v in idle
                                    if v.vehicle_id not in used],
                             self.params, travel_time, clock)
        for assignment in assignments + solo:
            for request in assignment.requests:
                del self.pending[request.id]
            spawned.extend(self._execute(assignment, clock))

        if clock >= self._next_reposition:
            self._reposition(clock)
            self._next_reposition = clock + self.reposition_interval

        following = clock + self.dispatch_interval
        if following < self.end_time and (self.pending or not self.day_over()):
            spawned.append(scheduler.Trigger(following, self.actor_id,
                                             Dispatch()))
        elif self.pending:
            for request in sorted(self.pending.values(), key=lambda r: r.id):
                spawned.append(self._unavailable(
                        request, clock, "ride-hail service ended"))
            self.pending.clear()
        return spawned

    def _unavailable(self, request, clock, reason):
        LOG.warning("request %s of %s: %s", request.id, request.person_id,
                    reason)
        return scheduler.Trigger(clock, request.person_id,
                                 RideHailUnavailable(request.id, reason))

    def _traverse(self, vehicle, start, end, depart, passengers):
        leg = self.drive(vehicle.vehicle_id, start, end, depart)
        before = vehicle.fuel
        try:
            vehicle.fuel = energy.consume_fuel(vehicle.fuel,
                                               vehicle.vehicle_type,
                                               leg.distance)
        except energy.OutOfFuel as exc:
            vehicle.fuel = exc.state
            self.events.emit(leg.arrive, "OutOfFuel",
                             vehicle=vehicle.vehicle_id,
                             missingDistance=exc.missing_meters)
        outputs.path_traversal(
                self.events, leg, vehicle.vehicle_id, vehicle.vehicle_type,
                passengers, before, vehicle.fuel, self.free_flow(leg.links),
                driver=f"rideHailAgent-{vehicle.vehicle_id}")
        return leg

    def _execute(self, assignment, clock):
        vehicle = self.vehicles[assignment.vehicle_id]
        requests = {r.id: r for r in assignment.requests}
        here, t, onboard = vehicle.location, clock, 0
        pickups, dropoffs, distances = {}, {}, {}
        for stop in assignment.stops:
            leg = self._traverse(vehicle, here, stop.location, t, onboard)
            for rid in [r for r in distances if r not in dropoffs]:
                distances[rid] += leg.distance
            t, here = leg.arrive, stop.location
            if stop.pickup:
                pickups[stop.request_id] = t
                distances[stop.request_id] = 0.0
                onboard += 1
            else:
                dropoffs[stop.request_id] = t
                onboard -= 1
        vehicle.location = here
        vehicle.busy_until = t
        vehicle.status = VehicleStatus.OCCUPIED
        return [scheduler.Trigger(
                    pickups[rid], requests[rid].person_id,
                    RideHailPickup(rid, vehicle.vehicle_id,
                                   vehicle.vehicle_type.id, pickups[rid],
                                   dropoffs[rid], distances[rid]))
                for rid in sorted(requests)]

    def _reposition(self, clock):
        self.recent = [(t, z) for t, z in self.recent
                       if clock - t <= self.demand_window]
        if self.taz_of is None or self.strategy is Strategy.DEFAULT:
            return
        demand = {}
        for _, zone in self.recent:
            demand[zone] = demand.get(zone, 0) + 1
        idle = [(v.vehicle_id, v.location) for v in self.vehicles.values()
                if v.status is VehicleStatus.IDLE and v.on_shift(clock)]
        for order in reposition(self.strategy, idle, demand, self.taz_of,
                                self.centroids, self.min_distance):
            vehicle = self.vehicles[order.vehicle_id]
            if vehicle.geofence is not None and \
                    not vehicle.geofence.contains(order.destination):
                continue
            leg = self._traverse(vehicle, vehicle.location, order.destination,
                                 clock, 0)
            vehicle.location = order.destination
            vehicle.busy_until = leg.arrive
            vehicle.status = VehicleStatus.REPOSITIONING

    def _refuel(self, vehicle, clock):
        vehicle_type = vehicle.vehicle_type
        t = clock
        if not vehicle_type.electric:
            vehicle.fuel = energy.refill(vehicle.fuel, vehicle_type)
            vehicle.status = VehicleStatus.IDLE
            return
        where = vehicle.vehicle_id
        if vehicle.autonomous and self.depots:
            depot = min(self.depots,
                        key=lambda p: (p.distance_to(vehicle.location),
                                       p.x, p.y))
            leg = self._traverse(vehicle, vehicle.location, depot, clock, 0)
            vehicle.location, t = depot, leg.arrive
            where = f"depot({depot.x:g},{depot.y:g})"
        headroom = vehicle_type.primary_capacity - vehicle.fuel.primary
        duration = min(headroom / (self.depot_power * 1000.0),
                       max(self.end_time - t, 0.0))
        vehicle.fuel, _ = parking.charge_at(
                self.events, vehicle.vehicle_id, vehicle_type, vehicle.fuel,
                self.depot_power, t, t + duration, where)
        vehicle.busy_until = t + duration
        vehicle.status = VehicleStatus.REFUELING
