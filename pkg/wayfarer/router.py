"""Multimodal itineraries built from network routes and the transit timetable"""
import dataclasses
import logging
import typing

from . import choice
from . import modes
from . import network
from . import transit
from .geometry import Point

LOG = logging.getLogger(__name__)

# Distances below this are treated as the same place
SAME_PLACE_METERS = 1.0


@dataclasses.dataclass(frozen=True)
class ItineraryLeg:
    """
    One vehicle leg of an itinerary

    * mode: vehicle-level mode
    * vehicle_id: the vehicle used, the traveller's body for walk legs
    * start, end: planar endpoints
    * depart, arrive: seconds from midnight
    * distance: meters travelled
    * links: network link path, empty for transit and teleports
    * ride: the boarded transit segment for transit legs
    * cost: dollars paid for this leg
    """
    mode: modes.LegMode
    vehicle_id: typing.Optional[str]
    start: Point
    end: Point
    depart: float
    arrive: float
    distance: float
    links: typing.Tuple[str, ...] = ()
    ride: typing.Optional[transit.Ride] = None
    cost: float = 0.0

    @property
    def duration(self):
        return self.arrive - self.depart

    def shifted(self, delta):
        return dataclasses.replace(self, depart=self.depart + delta,
                                   arrive=self.arrive + delta)


@dataclasses.dataclass(frozen=True)
class Itinerary:
    """
    A priced and timed sequence of legs between two activities

    * classification: the trip mode this itinerary is offered as
    * legs: legs in travel order, never overlapping in time
    * total_cost: dollars
    * transfers: vehicle changes on scheduled transit
    * parking: the stall quote the driver intends to use
    * ride_hail: the quote a ride-hail leg was priced with
    * shared_vehicle_id: the shared vehicle the itinerary picks up
    """
    classification: modes.Mode
    legs: typing.Tuple[ItineraryLeg, ...]
    total_cost: float = 0.0
    transfers: int = 0
    parking: typing.Any = None
    ride_hail: typing.Any = None
    shared_vehicle_id: typing.Optional[str] = None

    def __post_init__(self):
        if not self.legs:
            raise ValueError("an itinerary needs at least one leg")
        for before, after in zip(self.legs, self.legs[1:]):
            if after.depart < before.arrive - 1e-6:
                raise ValueError(
                        f"{self.classification.value} legs overlap at "
                        f"{after.depart:g}")

    @property
    def depart(self):
        return self.legs[0].depart

    @property
    def arrive(self):
        return self.legs[-1].arrive

    @property
    def total_time(self):
        return self.arrive - self.depart

    @property
    def distance(self):
        return sum(leg.distance for leg in self.legs)

    @property
    def uses_rail(self):
        return any(leg.ride is not None and leg.ride.trip.route_type != "bus"
                   for leg in self.legs)

    def vehicle_legs(self):
        return [leg for leg in self.legs if leg.mode is not modes.LegMode.WALK]

    def shifted(self, delta):
        return dataclasses.replace(
                self, legs=tuple(leg.shifted(delta) for leg in self.legs))


@dataclasses.dataclass(frozen=True)
class TransitAccess:
    """
    How the traveller reaches (or leaves) scheduled transit

    * classification: the transit mode being built
    * vehicle_id, vehicle_location: the bike or car used for access
    * ride_hail: callable (origin, stop location, time) -> quote or None
    * egress_vehicle: (vehicle id, location) of a car left at a station,
      driven home after the transit part
    """
    classification: modes.Mode
    vehicle_id: typing.Optional[str] = None
    vehicle_location: typing.Optional[Point] = None
    ride_hail: typing.Optional[typing.Callable] = None
    egress_vehicle: typing.Optional[typing.Tuple[str, Point]] = None

    @property
    def leg_mode(self):
        if self.egress_vehicle is not None:
            return modes.LegMode.WALK
        return modes.TRANSIT_ACCESS[self.classification]


class Router:
    """
    Answers itinerary requests against one iteration's travel times

    Walk and bike paths do not depend on congestion and are cached across
    iterations; car paths are recomputed for every request.
    """

    def __init__(self, net, table, timetable=None,
                 speeds=network.ModeSpeeds(), access_radius=None,
                 max_transfers=2, fare_multiplier=1.0, max_access_stops=3):
        """
        Initialiser

        Args:
            net (network.Network): street network
            table (network.LinkTravelTimeTable): car travel times
            timetable (transit.Timetable): scheduled transit, None if absent
            speeds (network.ModeSpeeds): walk and bike speeds
            access_radius (dict): LegMode -> meters searched for stops
            max_transfers (int): transit vehicle changes allowed
            fare_multiplier (float): scales every scheduled fare
            max_access_stops (int): stops considered for vehicle access
        """
        self.network = net
        self.table = table
        self.timetable = timetable
        self.speeds = speeds
        self.access_radius = access_radius or {
                modes.LegMode.WALK: 1000.0,
                modes.LegMode.BIKE: 3000.0,
                modes.LegMode.CAR: 8000.0,
                modes.LegMode.RIDE_HAIL: 8000.0,
        }
        self.max_transfers = max_transfers
        self.fare_multiplier = fare_multiplier
        self.max_access_stops = max_access_stops
        self._path_cache = {}

    @classmethod
    def from_config(cls, config, net, table, timetable=None):
        radius = {modes.LegMode[key]: float(value) for key, value in
                  config["transit.accessRadiusMeters"].items()}
        return cls(net, table, timetable,
                   speeds=network.ModeSpeeds.from_config(config),
                   access_radius=radius,
                   max_transfers=int(config["transit.maxTransfers"]),
                   fare_multiplier=float(config["transit.fareMultiplier"]))

    def with_table(self, table):
        """A router over new car travel times keeping the walk/bike cache"""
        other = Router(self.network, table, self.timetable, self.speeds,
                       self.access_radius, self.max_transfers,
                       self.fare_multiplier, self.max_access_stops)
        other._path_cache = self._path_cache
        return other

    def _slow_path(self, start, end, mode):
        a, snap_a = self.network.nearest_node(start, mode)
        b, snap_b = self.network.nearest_node(end, mode)
        key = (a, b, mode)
        if key not in self._path_cache:
            route = network.shortest_path(self.network, a, b, 0.0, mode,
                                          self.table, speeds=self.speeds)
            self._path_cache[key] = (route.links, route.distance,
                                     route.duration)
        links, distance, duration = self._path_cache[key]
        flat = self.speeds.speed(mode)
        return links, snap_a + distance + snap_b, \
            duration + (snap_a + snap_b) / flat

    def walk_leg(self, start, end, depart, body_id=None):
        """
        Walk between two points, straight-line if the network cannot

        Returns:
            ItineraryLeg: the walk
        """
        if start.distance_to(end) < SAME_PLACE_METERS:
            return ItineraryLeg(modes.LegMode.WALK, body_id, start, end,
                                depart, depart, 0.0)
        try:
            links, distance, duration = self._slow_path(start, end, "walk")
        except network.Unreachable:
            distance = start.distance_to(end)
            links, duration = (), distance / self.speeds.walk
        return ItineraryLeg(modes.LegMode.WALK, body_id, start, end, depart,
                            depart + duration, distance, links)

    def fixed_walk_leg(self, start, end, depart, distance, body_id=None):
        """Walk a known distance at flat walking speed"""
        return ItineraryLeg(modes.LegMode.WALK, body_id, start, end, depart,
                            depart + distance / self.speeds.walk, distance)

    def bike_leg(self, start, end, depart, vehicle_id):
        if start.distance_to(end) < SAME_PLACE_METERS:
            return ItineraryLeg(modes.LegMode.BIKE, vehicle_id, start, end,
                                depart, depart, 0.0)
        links, distance, duration = self._slow_path(start, end, "bike")
        return ItineraryLeg(modes.LegMode.BIKE, vehicle_id, start, end,
                            depart, depart + duration, distance, links)

    def drive_leg(self, start, end, depart, vehicle_id, value_of_time=None,
                  mode=modes.LegMode.CAR, links=None):
        """
        Drive between two points on current congested times

        Args:
            start, end (Point): endpoints, snapped to the car network
            depart (float): departure time
            vehicle_id (str): the vehicle driven
            value_of_time (float): converts tolls into time
            mode (modes.LegMode): CAR, CAV or RIDE_HAIL
            links (tuple): a stored path to reuse if it still fits

        Returns:
            ItineraryLeg: the drive, costed with its tolls
        """
        a, _ = self.network.nearest_node(start, "car")
        b, _ = self.network.nearest_node(end, "car")
        if links and self._path_fits(links, a, b):
            arrive = network.path_arrival(self.network, links, depart, "car",
                                          self.table)
            route = network.Route(
                    tuple(links), depart, arrive,
                    self.network.path_length(links),
                    toll=sum(self.network.links[l].toll for l in links))
        else:
            route = network.shortest_path(self.network, a, b, depart, "car",
                                          self.table, value_of_time)
        return ItineraryLeg(mode, vehicle_id, start, end, depart, route.arrive,
                            route.distance, route.links, cost=route.toll)

    def _path_fits(self, links, origin, destination):
        if any(l not in self.network.links for l in links):
            return False
        path = [self.network.links[l] for l in links]
        if path[0].from_node != origin or path[-1].to_node != destination:
            return False
        return all(p.to_node == n.from_node and "car" in p.modes
                   for p, n in zip(path, path[1:]))

    def walk_itinerary(self, origin, destination, depart, body_id):
        leg = self.walk_leg(origin, destination, depart, body_id)
        return Itinerary(modes.Mode.WALK, (leg,))

    def bike_itinerary(self, origin, destination, depart, body_id, bike_id,
                       bike_location):
        access = self.walk_leg(origin, bike_location, depart, body_id)
        ride = self.bike_leg(bike_location, destination, access.arrive,
                             bike_id)
        egress = self.walk_leg(destination, destination, ride.arrive, body_id)
        return Itinerary(modes.Mode.BIKE, (access, ride, egress))

    def build_car_itinerary(self, origin, destination, depart, body_id,
                            vehicle_id, vehicle_location, parking_quote,
                            value_of_time=None, links=None):
        """
        Walk to the car, drive to the chosen stall and walk on from there

        Args:
            origin (Point): where the driver is
            destination (Point): the next activity
            depart (float): departure time
            body_id (str): the driver's body vehicle
            vehicle_id (str): the car
            vehicle_location (Point): where the car is parked
            parking_quote (parking.StallQuote): the stall to use at the
                destination
            value_of_time (float): dollars per hour, for tolls
            links (tuple): a stored driving path to reuse if it still fits

        Returns:
            Itinerary: a CAR itinerary
        """
        access = self.walk_leg(origin, vehicle_location, depart, body_id)
        stall = parking_quote.location or destination
        drive = self.drive_leg(vehicle_location, stall, access.arrive,
                               vehicle_id, value_of_time, links=links)
        egress = self.fixed_walk_leg(stall, destination, drive.arrive,
                                     parking_quote.walk_distance, body_id)
        return Itinerary(modes.Mode.CAR, (access, drive, egress),
                         total_cost=drive.cost + parking_quote.price,
                         parking=parking_quote)

    def cav_itinerary(self, origin, destination, depart, body_id, cav_id,
                      value_of_time=None):
        """The CAV picks the traveller up at the door and drops them off"""
        access = self.walk_leg(origin, origin, depart, body_id)
        drive = self.drive_leg(origin, destination, depart, cav_id,
                               value_of_time, mode=modes.LegMode.CAV)
        egress = self.walk_leg(destination, destination, drive.arrive,
                               body_id)
        return Itinerary(modes.Mode.CAV, (access, drive, egress),
                         total_cost=drive.cost)

    def ride_hail_itinerary(self, origin, destination, depart, body_id,
                            quote):
        """
        Wait for a ride-hail pickup and ride to the destination

        Args:
            quote (ridehail.Quote): wait, price and in-vehicle estimates

        Returns:
            Itinerary: RIDE_HAIL or RIDE_HAIL_POOLED
        """
        access = self.walk_leg(origin, origin, depart, body_id)
        pickup = depart + quote.wait
        ride = ItineraryLeg(modes.LegMode.RIDE_HAIL, None, origin,
                            destination, pickup, pickup + quote.travel_time,
                            quote.distance, cost=quote.price)
        egress = self.walk_leg(destination, destination, ride.arrive, body_id)
        classification = modes.Mode.RIDE_HAIL_POOLED if quote.pooled \
            else modes.Mode.RIDE_HAIL
        return Itinerary(classification, (access, ride, egress),
                         total_cost=quote.price, ride_hail=quote)

    def shared_itinerary(self, origin, destination, depart, body_id,
                         classification, vehicle_id, vehicle_location,
                         drop_location=None, price_per_minute=0.0):
        """
        Walk to a shared vehicle, ride it and walk on from where it is left

        Args:
            classification (modes.Mode): SHARED_BIKE or SHARED_CAR
            vehicle_id (str): the shared vehicle
            vehicle_location (Point): where it is parked now
            drop_location (Point): where it will be left, the destination
                when None
            price_per_minute (float): usage charge

        Returns:
            Itinerary: the shared itinerary
        """
        drop = drop_location or destination
        access = self.walk_leg(origin, vehicle_location, depart, body_id)
        if classification is modes.Mode.SHARED_BIKE:
            ride = self.bike_leg(vehicle_location, drop, access.arrive,
                                 vehicle_id)
        else:
            ride = self.drive_leg(vehicle_location, drop, access.arrive,
                                  vehicle_id)
        price = price_per_minute * ride.duration / 60.0
        ride = dataclasses.replace(ride, cost=ride.cost + price)
        egress = self.walk_leg(drop, destination, ride.arrive, body_id)
        return Itinerary(classification, (access, ride, egress),
                         total_cost=ride.cost, shared_vehicle_id=vehicle_id)

    def _access_legs(self, origin, stop, depart, access, body_id):
        leg_mode = access.leg_mode
        if leg_mode is modes.LegMode.WALK:
            return [self.walk_leg(origin, stop, depart, body_id)], 0.0
        if leg_mode is modes.LegMode.BIKE:
            walk = self.walk_leg(origin, access.vehicle_location, depart,
                                 body_id)
            ride = self.bike_leg(access.vehicle_location, stop, walk.arrive,
                                 access.vehicle_id)
            return [walk, ride], 0.0
        if leg_mode is modes.LegMode.CAR:
            walk = self.walk_leg(origin, access.vehicle_location, depart,
                                 body_id)
            drive = self.drive_leg(access.vehicle_location, stop, walk.arrive,
                                   access.vehicle_id)
            return [walk, drive], drive.cost
        quote = access.ride_hail(origin, stop, depart)
        if quote is None:
            raise network.Unreachable("no ride-hail to the stop")
        walk = self.walk_leg(origin, origin, depart, body_id)
        pickup = depart + quote.wait
        ride = ItineraryLeg(modes.LegMode.RIDE_HAIL, None, origin, stop,
                            pickup, pickup + quote.travel_time, quote.distance,
                            cost=quote.price)
        return [walk, ride], quote.price

    def _ride_leg(self, ride):
        stops = self.timetable.stops
        sequence = [stops[st.stop_id] for st in
                    ride.trip.stop_times[ride.board_index:
                                         ride.alight_index + 1]]
        distance = sum(a.distance_to(b)
                       for a, b in zip(sequence, sequence[1:]))
        return ItineraryLeg(modes.LegMode.TRANSIT, ride.trip.id,
                            stops[ride.board_stop], stops[ride.alight_stop],
                            ride.depart, ride.arrive, distance, ride=ride,
                            cost=ride.fare * self.fare_multiplier)

    def _transit_candidates(self, origin, destination, depart, access,
                            body_id, value_of_time, excluded):
        stops = self.timetable.stops
        radius = self.access_radius.get(access.leg_mode, 1000.0)
        nearby = self.timetable.stops_near(origin, radius)
        if access.leg_mode is not modes.LegMode.WALK:
            nearby = nearby[:self.max_access_stops]
        sources, access_legs = {}, {}
        for stop_id in nearby:
            try:
                legs, cost = self._access_legs(origin, stops[stop_id], depart,
                                               access, body_id)
            except network.Unreachable:
                continue
            sources[stop_id] = legs[-1].arrive
            access_legs[stop_id] = (legs, cost)
        if not sources:
            return []

        if access.egress_vehicle is not None:
            _, car_location = access.egress_vehicle
            anchor, egress_radius = car_location, self.access_radius.get(
                    modes.LegMode.WALK, 1000.0)
        else:
            anchor, egress_radius = destination, self.access_radius.get(
                    modes.LegMode.WALK, 1000.0)
        targets = {}
        for stop_id in self.timetable.stops_near(anchor, egress_radius):
            targets[stop_id] = self.walk_leg(stops[stop_id], anchor,
                                             0.0).duration
        if not targets:
            return []

        candidates = []
        for journey in self.timetable.journeys(sources, targets,
                                               self.max_transfers, excluded):
            legs, cost = access_legs[journey.first_stop]
            legs = list(legs)
            for step in journey.steps:
                if isinstance(step, transit.Ride):
                    leg = self._ride_leg(step)
                    cost += leg.cost
                else:
                    leg = ItineraryLeg(modes.LegMode.WALK, body_id,
                                       stops[step.from_stop],
                                       stops[step.to_stop], step.depart,
                                       step.arrive, step.distance)
                legs.append(leg)
            last = stops[journey.last_stop]
            if access.egress_vehicle is not None:
                car_id, car_location = access.egress_vehicle
                walk = self.walk_leg(last, car_location, journey.arrive,
                                     body_id)
                try:
                    drive = self.drive_leg(car_location, destination,
                                           walk.arrive, car_id, value_of_time)
                except network.Unreachable:
                    continue
                cost += drive.cost
                legs += [walk, drive, self.walk_leg(
                        destination, destination, drive.arrive, body_id)]
            else:
                legs.append(self.walk_leg(last, destination, journey.arrive,
                                          body_id))
            candidates.append(Itinerary(access.classification, tuple(legs),
                                        total_cost=cost,
                                        transfers=journey.transfers))
        return candidates

    def transit_itineraries(self, origin, destination, depart, accesses,
                            value_of_time, params, rng, body_id=None,
                            excluded_trips=frozenset()):
        """
        The chosen itinerary of each transit classification

        For each access mode the candidates are the earliest-arrival journeys
        with increasing transfer counts; one of them is drawn from a logit
        over trip utilities.

        Args:
            origin, destination (Point): trip endpoints
            depart (float): departure time
            accesses (iterable of TransitAccess): classifications to build
            value_of_time (float): traveller's dollars per hour
            params (choice.ModeChoiceParams): utility parameters
            rng (numpy.random.Generator): random stream
            body_id (str): the traveller's body vehicle
            excluded_trips (frozenset): transit trips that must not be used

        Returns:
            list of Itinerary: at most one per classification
        """
        if self.timetable is None:
            raise transit.NoService("no transit timetable loaded")
        chosen = []
        for access in sorted(accesses, key=lambda a: a.classification.value):
            candidates = self._transit_candidates(
                    origin, destination, depart, access, body_id,
                    value_of_time, excluded_trips)
            if not candidates:
                continue
            utilities = {i: choice.trip_utility(c, value_of_time, params)
                         for i, c in enumerate(candidates)}
            chosen.append(candidates[choice.mnl_choose(
                    utilities, params.epsilon, rng)])
        if not chosen:
            raise transit.NoService(
                    f"no transit service from ({origin.x:g}, {origin.y:g}) "
                    f"after {depart:g}")
        return chosen
