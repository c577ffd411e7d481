"""Parking stall and charger management"""
import dataclasses
import itertools
import logging
import typing

from . import energy
from . import errors
from .geometry import Point

LOG = logging.getLogger(__name__)


class NoParking(errors.WayfarerError):
    """Every stall that could serve the request is taken"""


class RaceLost(errors.WayfarerError):
    """The quoted pool filled up between inquiry and claim"""


class NotChargeable(errors.WayfarerError):
    """The vehicle cannot charge, or the stall has no charger"""


@dataclasses.dataclass(frozen=True)
class StallQuote:
    """
    One parking alternative offered to a driver

    * stall_id: the pool the stall belongs to
    * walk_distance: meters from the stall to the destination
    * price: dollars for the expected stay
    * charger_power: kW, None without a charger
    * detour: extra straight-line meters driven to reach a charger
    * location: where the car is left, the destination when None
    """
    stall_id: str
    zone: str
    walk_distance: float
    price: float
    charger_power: typing.Optional[float] = None
    residential: bool = False
    detour: float = 0.0
    location: typing.Optional[Point] = None

    def __post_init__(self):
        if self.walk_distance < 0:
            raise ValueError("walk distance cannot be negative")


@dataclasses.dataclass
class StallPool:
    """Stalls of one descriptor in one zone"""
    id: str
    zone_id: str
    descriptor: typing.Any
    available: int
    claimed: int = 0

    @property
    def capacity(self):
        return self.descriptor.count


@dataclasses.dataclass(frozen=True)
class Reservation:
    id: int
    quote: StallQuote
    vehicle_id: str
    start: float


def stay_price(descriptor, seconds):
    """Fixed fee, or the hourly fee prorated per second"""
    if descriptor.pricing == "hourly":
        return descriptor.cost * max(seconds, 0.0) / 3600.0
    return descriptor.cost


class ParkingManager:
    """
    Base stall manager

    Subclasses decide which pools may serve a destination and how far the
    walk from them is.
    """

    def __init__(self, descriptors=(), events=None, max_walk_distance=800.0):
        """
        Initialiser

        Args:
            descriptors (iterable of scenario.ParkingStallDescriptor): stalls
            events (outputs.EventLog): where ReservesParking and charging
                events go, None to drop them
            max_walk_distance (float): longest walk from a stall in meters
        """
        self.events = events
        self.max_walk_distance = max_walk_distance
        self.pools = {}
        self._by_zone = {}
        for index, descriptor in enumerate(descriptors):
            pool = StallPool(f"{descriptor.manager[1]}:{descriptor.zone}:"
                             f"{index}", descriptor.zone, descriptor,
                             descriptor.count)
            self.pools[pool.id] = pool
            self._by_zone.setdefault(descriptor.zone, []).append(pool)
        self._ids = itertools.count()
        self.claims = 0
        self.releases = 0

    def _emit(self, time, event_type, **attributes):
        if self.events is not None:
            self.events.emit(time, event_type, **attributes)

    @staticmethod
    def _eligible(pool, category, arrival_time):
        restriction = pool.descriptor.restriction
        if restriction is not None and not restriction.allows(category,
                                                              arrival_time):
            return False
        return pool.available > 0

    def _quote(self, pool, destination, walk_distance, expected_duration,
               location=None):
        descriptor = pool.descriptor
        detour = 0.0
        if descriptor.charger_power and location is not None:
            detour = destination.distance_to(location)
        return StallQuote(
                stall_id=pool.id,
                zone=pool.zone_id,
                walk_distance=walk_distance,
                price=stay_price(descriptor, expected_duration),
                charger_power=descriptor.charger_power,
                residential=descriptor.parking_type == "residential",
                detour=detour,
                location=location)

    def candidate_pools(self, destination, zone):
        """(pool, walk distance, stall location) that could serve a trip"""
        raise NotImplementedError

    def inquire(self, destination, zone, category, arrival_time,
                expected_duration):
        """
        Quote every eligible pool near a destination

        Args:
            destination (Point): the next activity
            zone (str): TAZ of the destination
            category (scenario.VehicleCategory): the vehicle's category
            arrival_time (float): expected arrival
            expected_duration (float): expected stay in seconds

        Returns:
            list of StallQuote
        """
        quotes = [self._quote(pool, destination, distance, expected_duration,
                              location)
                  for pool, distance, location in
                  self.candidate_pools(destination, zone)
                  if self._eligible(pool, category, arrival_time)]
        if not quotes:
            raise NoParking(f"no stall available near zone {zone}")
        return quotes

    def claim(self, quote, vehicle_id, time, driver_id=None):
        """
        Take a stall from the quoted pool

        Returns:
            Reservation: the claimed stall
        """
        pool = self.pools.get(quote.stall_id)
        if pool is None or pool.available <= 0:
            raise RaceLost(f"pool {quote.stall_id} filled up")
        pool.available -= 1
        pool.claimed += 1
        self.claims += 1
        reservation = Reservation(next(self._ids), quote, vehicle_id, time)
        self._emit(time, "ReservesParking", vehicle=vehicle_id,
                   driver=driver_id, parkingZone=pool.zone_id,
                   parkingType=pool.descriptor.parking_type,
                   pricingModel=pool.descriptor.pricing,
                   cost=quote.price, chargingPower=quote.charger_power,
                   locationX=quote.location.x if quote.location else None,
                   locationY=quote.location.y if quote.location else None)
        return reservation

    def release(self, reservation, depart_time):
        """
        Free a stall

        Returns:
            float: the final price for the actual stay
        """
        pool = self.pools.get(reservation.quote.stall_id)
        self.releases += 1
        if pool is None:
            return reservation.quote.price
        pool.available += 1
        pool.claimed -= 1
        return stay_price(pool.descriptor, depart_time - reservation.start)

    def occupancy(self):
        return sum(pool.claimed for pool in self.pools.values())

    def charge_session(self, vehicle_id, vehicle_type, fuel, reservation,
                       plug_in, plug_out):
        """
        Charge a parked electric vehicle for its stay

        Args:
            vehicle_id (str): the vehicle
            vehicle_type (scenario.VehicleType): its type
            fuel (energy.FuelState): levels at plug-in
            reservation (Reservation): the claimed stall
            plug_in, plug_out (float): session times

        Returns:
            typing.Tuple[energy.FuelState, float]: levels at plug-out and
            joules delivered
        """
        power = reservation.quote.charger_power
        if not vehicle_type.electric or not power:
            raise NotChargeable(
                    f"vehicle {vehicle_id} cannot charge at stall "
                    f"{reservation.quote.stall_id}")
        if vehicle_type.charging_power:
            power = min(power, vehicle_type.charging_power)
        return charge_at(self.events, vehicle_id, vehicle_type, fuel, power,
                         plug_in, plug_out, reservation.quote.stall_id)


def charge_at(events, vehicle_id, vehicle_type, fuel, power, plug_in,
              plug_out, where):
    """Run a constant-power charging session and record its events"""
    before = fuel.state_of_charge(vehicle_type)
    if events is not None:
        events.emit(plug_in, "ChargingPlugIn", vehicle=vehicle_id,
                    stall=where, chargingPower=power, primaryFuelLevel=before)
    fuel, delivered = energy.charge(fuel, vehicle_type, power,
                                    plug_out - plug_in)
    if events is not None:
        events.emit(plug_out, "ChargingPlugOut", vehicle=vehicle_id,
                    stall=where, chargingPower=power,
                    primaryFuelLevel=fuel.state_of_charge(vehicle_type),
                    fuel=delivered)
    return fuel, delivered


class UbiquitousParking(ParkingManager):
    """Free parking right at every destination"""

    def candidate_pools(self, destination, zone):
        return ()

    def inquire(self, destination, zone, category, arrival_time,
                expected_duration):
        return [StallQuote(stall_id="ubiquitous", zone=zone, walk_distance=0.0,
                           price=0.0)]

    def claim(self, quote, vehicle_id, time, driver_id=None):
        self.claims += 1
        self._emit(time, "ReservesParking", vehicle=vehicle_id,
                   driver=driver_id, parkingZone=quote.zone,
                   parkingType="public", pricingModel="fixed", cost=0.0)
        return Reservation(next(self._ids), quote, vehicle_id, time)


class TazParking(ParkingManager):
    """
    Stall counts per TAZ

    The walk from a TAZ pool grows linearly as the pool empties, from zero
    when every stall is free to the maximum walk when none is.
    """

    def candidate_pools(self, destination, zone):
        for pool in self._by_zone.get(zone, ()):
            if pool.capacity <= 0:
                continue
            occupied = 1.0 - pool.available / pool.capacity
            distance = min(max(self.max_walk_distance * occupied, 0.0),
                           self.max_walk_distance)
            yield pool, distance, pool.descriptor.location


class LinkParking(ParkingManager):
    """Persistent stalls along links, quoted if within walking distance"""

    def __init__(self, descriptors, net, events=None,
                 max_walk_distance=800.0):
        super().__init__(descriptors, events, max_walk_distance)
        self._locations = {}
        for pool in self.pools.values():
            location = pool.descriptor.location
            if location is None:
                link = net.links.get(pool.zone_id)
                if link is None:
                    raise KeyError(f"parking on unknown link {pool.zone_id}")
                location = net.nodes[link.from_node].towards(
                        net.nodes[link.to_node], 0.5)
            self._locations[pool.id] = location

    def candidate_pools(self, destination, zone):
        for pool_id, pool in sorted(self.pools.items()):
            location = self._locations[pool_id]
            distance = destination.distance_to(location)
            if distance <= self.max_walk_distance:
                yield pool, distance, location


def make_manager(manager_type, descriptors, net=None, events=None,
                 max_walk_distance=800.0):
    """
    Build the parking manager named in the configuration

    Args:
        manager_type (str): UBIQUITOUS, TAZ or LINK
        descriptors (iterable): stall descriptors
        net (network.Network): needed for link-level stalls
        events (outputs.EventLog): event sink
        max_walk_distance (float): meters

    Returns:
        ParkingManager: the manager
    """
    kind = manager_type.upper()
    if kind == "UBIQUITOUS":
        return UbiquitousParking((), events, max_walk_distance)
    if kind == "TAZ":
        return TazParking(descriptors, events, max_walk_distance)
    if kind == "LINK":
        return LinkParking(descriptors, net, events, max_walk_distance)
    raise ValueError(f"unknown parking manager type {manager_type}")
