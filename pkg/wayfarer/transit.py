"""Scheduled transit timetable and round-based earliest-arrival search"""
import bisect
import dataclasses
import logging
import math
import typing

from . import errors
from .geometry import Point

LOG = logging.getLogger(__name__)


class NoService(errors.WayfarerError):
    """No scheduled service connects origin and destination"""


@dataclasses.dataclass(frozen=True)
class StopTime:
    stop_id: str
    arrival: float
    departure: float
    fare: float


@dataclasses.dataclass(frozen=True)
class TransitTrip:
    """One scheduled run of a transit vehicle"""
    id: str
    route_id: str
    route_type: str
    vehicle_type_id: str
    stop_times: typing.Tuple[StopTime, ...]

    @property
    def stops(self):
        return tuple(st.stop_id for st in self.stop_times)


@dataclasses.dataclass(frozen=True)
class _Pattern:
    """Trips of a route sharing one stop sequence, sorted by departure"""
    stops: typing.Tuple[str, ...]
    trips: typing.Tuple[TransitTrip, ...]

    def earliest_trip(self, index, ready_time, excluded):
        departures = [trip.stop_times[index].departure for trip in self.trips]
        start = bisect.bisect_left(departures, ready_time)
        for trip in self.trips[start:]:
            if trip.id not in excluded:
                return trip
        return None


@dataclasses.dataclass(frozen=True)
class Ride:
    """A boarded segment of a transit trip"""
    trip: TransitTrip
    board_index: int
    alight_index: int

    @property
    def board_stop(self):
        return self.trip.stop_times[self.board_index].stop_id

    @property
    def alight_stop(self):
        return self.trip.stop_times[self.alight_index].stop_id

    @property
    def depart(self):
        return self.trip.stop_times[self.board_index].departure

    @property
    def arrive(self):
        return self.trip.stop_times[self.alight_index].arrival

    @property
    def fare(self):
        return self.trip.stop_times[self.board_index].fare


@dataclasses.dataclass(frozen=True)
class Transfer:
    """A footpath between two stops"""
    from_stop: str
    to_stop: str
    depart: float
    arrive: float
    distance: float


@dataclasses.dataclass(frozen=True)
class _Label:
    arrival: float
    parent: typing.Optional["_Label"] = None
    ride: typing.Optional[Ride] = None
    transfer: typing.Optional[Transfer] = None
    source_stop: typing.Optional[str] = None


@dataclasses.dataclass(frozen=True)
class Journey:
    """
    A stop-to-stop transit journey

    * first_stop: stop where the traveller starts (after access)
    * steps: Ride and Transfer elements in travel order
    """
    first_stop: str
    steps: typing.Tuple[typing.Union[Ride, Transfer], ...]

    @property
    def rides(self):
        return [step for step in self.steps if isinstance(step, Ride)]

    @property
    def last_stop(self):
        last = self.steps[-1]
        return last.alight_stop if isinstance(last, Ride) else last.to_stop

    @property
    def arrive(self):
        return self.steps[-1].arrive

    @property
    def transfers(self):
        return max(len(self.rides) - 1, 0)

    @property
    def fare(self):
        return sum(ride.fare for ride in self.rides)


def _unwind(label):
    steps = []
    while label.parent is not None:
        steps.append(label.ride or label.transfer)
        label = label.parent
    steps.reverse()
    return Journey(first_stop=label.source_stop, steps=tuple(steps))


class Timetable:
    """Stops, trips and footpath transfers of the scheduled transit system"""

    def __init__(self, stops, trips, transfer_radius=300.0, walk_speed=1.4):
        """
        Initialiser

        Args:
            stops (dict): stop id -> Point
            trips (iterable of TransitTrip): scheduled trips
            transfer_radius (float): meters within which stops are linked by
                footpaths
            walk_speed (float): footpath walking speed in m/s
        """
        self.stops = dict(stops)
        self.trips = {trip.id: trip for trip in trips}
        grouped = {}
        for trip in self.trips.values():
            grouped.setdefault((trip.route_id, trip.stops), []).append(trip)
        self._patterns = [
                _Pattern(stops, tuple(sorted(
                    group, key=lambda t: (t.stop_times[0].departure, t.id))))
                for (_, stops), group in sorted(grouped.items())]
        self.transfers = {stop_id: [] for stop_id in self.stops}
        stop_ids = sorted(self.stops)
        for a in stop_ids:
            for b in stop_ids:
                if a == b:
                    continue
                distance = self.stops[a].distance_to(self.stops[b])
                if distance <= transfer_radius:
                    self.transfers[a].append(
                            (b, distance / walk_speed, distance))

    @classmethod
    def from_frames(cls, routes, trips, stop_times, transfer_radius=300.0,
                    walk_speed=1.4):
        """
        Build a timetable from the GTFS-lite tables

        Args:
            routes (pandas.DataFrame): route_id, type
            trips (pandas.DataFrame): trip_id, route_id, vehicle_type_id
            stop_times (pandas.DataFrame): trip_id, stop_seq, stop_id, x, y,
                arrival_s, departure_s, fare_usd

        Returns:
            Timetable: the timetable
        """
        route_types = dict(zip(routes["route_id"].astype(str),
                               routes["type"].astype(str)))
        stops = {}
        by_trip = {}
        ordered = stop_times.sort_values(["trip_id", "stop_seq"])
        for row in ordered.itertuples(index=False):
            stop_id = str(row.stop_id)
            stops.setdefault(stop_id, Point(float(row.x), float(row.y)))
            by_trip.setdefault(str(row.trip_id), []).append(StopTime(
                    stop_id, float(row.arrival_s), float(row.departure_s),
                    float(row.fare_usd)))
        parsed = []
        for row in trips.itertuples(index=False):
            trip_id = str(row.trip_id)
            route_id = str(row.route_id)
            if trip_id not in by_trip:
                LOG.warning("transit trip %s has no stop times", trip_id)
                continue
            parsed.append(TransitTrip(
                    id=trip_id,
                    route_id=route_id,
                    route_type=route_types.get(route_id, "bus"),
                    vehicle_type_id=str(row.vehicle_type_id),
                    stop_times=tuple(by_trip[trip_id])))
        return cls(stops, parsed, transfer_radius, walk_speed)

    def stops_near(self, point, radius):
        """Stop ids within a radius of a point, nearest first"""
        found = [(point.distance_to(p), stop_id)
                 for stop_id, p in self.stops.items()]
        return [stop_id for d, stop_id in sorted(found) if d <= radius]

    def journeys(self, sources, targets, max_transfers=2,
                 excluded_trips=frozenset()):
        """
        Earliest-arrival journeys with increasing numbers of transfers

        Args:
            sources (dict): stop id -> earliest time the traveller is there
            targets (dict): stop id -> egress seconds from that stop
            max_transfers (int): vehicle changes allowed
            excluded_trips (frozenset): trip ids that must not be boarded

        Returns:
            list of Journey: for each transfer count, the journey arriving
            earliest at the destination (after egress), if it beats the
            journeys with fewer transfers
        """
        best = {stop: t for stop, t in sources.items()}
        previous = {stop: _Label(t, source_stop=stop)
                    for stop, t in sources.items()}
        found = []
        best_destination = math.inf
        for _ in range(max_transfers + 1):
            current = {}
            for pattern in self._patterns:
                if not any(stop in previous for stop in pattern.stops):
                    continue
                trip = None
                board_index = None
                board_label = None
                for index, stop in enumerate(pattern.stops):
                    if trip is not None:
                        arrival = trip.stop_times[index].arrival
                        if arrival < best.get(stop, math.inf):
                            best[stop] = arrival
                            current[stop] = _Label(
                                    arrival, parent=board_label,
                                    ride=Ride(trip, board_index, index))
                    label = previous.get(stop)
                    if label is None or index == len(pattern.stops) - 1:
                        continue
                    candidate = pattern.earliest_trip(index, label.arrival,
                                                      excluded_trips)
                    if candidate is None:
                        continue
                    if trip is None or (
                            candidate.stop_times[index].departure <
                            trip.stop_times[index].departure):
                        trip = candidate
                        board_index = index
                        board_label = label
            for stop, label in list(current.items()):
                for other, walk_time, distance in self.transfers[stop]:
                    arrival = label.arrival + walk_time
                    if arrival < best.get(other, math.inf):
                        best[other] = arrival
                        current[other] = _Label(
                                arrival, parent=label,
                                transfer=Transfer(stop, other, label.arrival,
                                                  arrival, distance))
            if not current:
                break
            round_best = None
            for stop, egress in sorted(targets.items()):
                label = current.get(stop)
                if label is None or label.transfer is not None:
                    continue
                at_destination = label.arrival + egress
                if round_best is None or at_destination < round_best[0]:
                    round_best = (at_destination, label)
            if round_best is not None and round_best[0] < best_destination:
                best_destination = round_best[0]
                found.append(_unwind(round_best[1]))
            previous = current
        return found
