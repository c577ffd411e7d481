"""Shared bike and car fleets"""
import dataclasses
import itertools
import logging
import typing

from . import errors
from .geometry import Point

LOG = logging.getLogger(__name__)

BY_TAZ = "fixed-non-reserving-fleet-by-TAZ"
FIXED = "fixed-non-reserving"
INEXHAUSTIBLE = "inexhaustible-reserving"


class DockFull(errors.WayfarerError):
    """No dock of the fleet has a free slot"""


class VehicleTaken(errors.WayfarerError):
    """Someone else took the vehicle first"""


@dataclasses.dataclass
class SharedVehicle:
    """
    * dock_id: the dock it is parked in, None while in use or dockless
    * taken_by: the person using it
    * pickup: where it was taken, for round-trip fleets
    """
    id: str
    fleet_id: str
    location: Point
    dock_id: typing.Optional[str] = None
    taken_by: typing.Optional[str] = None
    pickup: typing.Optional[Point] = None


def _free_dock(docks, occupancy, location):
    free = [d for d in docks if occupancy[d.id] < d.capacity]
    if not free:
        return None
    return min(free, key=lambda d: (d.location.distance_to(location), d.id))


def init_fleet(spec, homes, taz_centroids, rng):
    """
    Place a fleet's vehicles at the start of the day

    Args:
        spec (scenario.SharedFleetSpec): the fleet
        homes (list of Point): home locations of the population
        taz_centroids (dict): TAZ id -> Point
        rng (numpy.random.Generator): random stream

    Returns:
        list of SharedVehicle
    """
    if spec.strategy == INEXHAUSTIBLE:
        return []
    if spec.strategy == BY_TAZ:
        spots = [taz_centroids[zone] for zone in sorted(spec.taz_counts)
                 for _ in range(spec.taz_counts[zone])]
    elif homes and spec.size:
        picks = rng.integers(0, len(homes), size=spec.size)
        spots = [homes[int(i)] for i in picks]
    else:
        spots = []
    occupancy = {d.id: 0 for d in spec.docks}
    vehicles = []
    for index, spot in enumerate(spots):
        dock_id = None
        if spec.docks:
            dock = _free_dock(spec.docks, occupancy, spot)
            if dock is None:
                LOG.warning("fleet %s: docks full after %d vehicles", spec.id,
                            index)
                break
            occupancy[dock.id] += 1
            spot, dock_id = dock.location, dock.id
        vehicles.append(SharedVehicle(f"{spec.id}-{index}", spec.id, spot,
                                      dock_id))
    return vehicles


class SharedFleetManager:
    """
    Serializes takes and returns for one fleet

    Non-reserving fleets are first come first served: mode choice only sees
    the last known state and the take may still fail on arrival.
    """

    def __init__(self, spec, vehicles):
        self.spec = spec
        self.vehicles = {v.id: v for v in vehicles}
        self.occupancy = {d.id: 0 for d in spec.docks}
        for vehicle in vehicles:
            if vehicle.dock_id is not None:
                self.occupancy[vehicle.dock_id] += 1
        self._virtual = itertools.count()

    @property
    def mode(self):
        return self.spec.mode

    def available(self):
        return sorted((v for v in self.vehicles.values() if v.taken_by is None),
                      key=lambda v: v.id)

    def find_vehicle(self, location, time=None):
        """
        Nearest available vehicle within the search radius

        Returns:
            SharedVehicle: the vehicle, None if there is none
        """
        if self.spec.strategy == INEXHAUSTIBLE:
            return SharedVehicle(f"{self.spec.id}-v{next(self._virtual)}",
                                 self.spec.id, location)
        options = [(v.location.distance_to(location), v.id, v)
                   for v in self.available()
                   if v.location.distance_to(location)
                   <= self.spec.search_radius]
        if not options:
            return None
        return min(options, key=lambda o: o[:2])[2]

    def take(self, vehicle, person_id, time=None):
        """
        Check a vehicle out

        Raises:
            VehicleTaken: the vehicle is already in use
        """
        if self.spec.strategy == INEXHAUSTIBLE and \
                vehicle.id not in self.vehicles:
            self.vehicles[vehicle.id] = vehicle
        current = self.vehicles.get(vehicle.id)
        if current is None or current.taken_by is not None:
            raise VehicleTaken(f"shared vehicle {vehicle.id} is not available")
        if current.dock_id is not None:
            self.occupancy[current.dock_id] -= 1
            current.dock_id = None
        current.taken_by = person_id
        current.pickup = current.location
        return current

    def drop_location(self, vehicle_id, destination):
        """
        Where a vehicle taken toward a destination will be left

        Raises:
            DockFull: a docked fleet has no free dock
        """
        vehicle = self.vehicles.get(vehicle_id)
        if self.spec.round_trip and vehicle is not None and vehicle.pickup:
            return vehicle.pickup
        if self.spec.docks:
            dock = _free_dock(self.spec.docks, self.occupancy, destination)
            if dock is None:
                raise DockFull(f"fleet {self.spec.id} has no free dock")
            return dock.location
        return destination

    def return_vehicle(self, vehicle_id, location, time=None,
                       dockless_if_full=False):
        """
        Park a vehicle back

        Args:
            vehicle_id (str): the vehicle
            location (Point): where the rider ends up
            dockless_if_full (bool): leave it at the location instead of
                failing when every dock is full

        Returns:
            Point: where the vehicle was parked; the rider walks on from there

        Raises:
            DockFull: a docked fleet has no free dock
        """
        vehicle = self.vehicles[vehicle_id]
        spot, dock_id = location, None
        if self.spec.round_trip and vehicle.pickup is not None:
            spot = vehicle.pickup
        if self.spec.docks:
            dock = _free_dock(self.spec.docks, self.occupancy, spot)
            if dock is not None:
                spot, dock_id = dock.location, dock.id
            elif not dockless_if_full:
                raise DockFull(f"fleet {self.spec.id} has no free dock")
            else:
                LOG.warning("fleet %s: docks full, %s left at (%g, %g)",
                            self.spec.id, vehicle_id, spot.x, spot.y)
        if self.spec.strategy == INEXHAUSTIBLE:
            del self.vehicles[vehicle_id]
            return spot
        if dock_id is not None:
            self.occupancy[dock_id] += 1
        vehicle.location, vehicle.dock_id = spot, dock_id
        vehicle.taken_by = vehicle.pickup = None
        return spot
