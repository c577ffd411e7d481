"""
Zone-to-zone lookup tables of observed trip characteristics

Trips recorded during a day are averaged per (mode, origin TAZ, destination
TAZ, hour) when the iteration is finalized. Ride-hail and parking skims are
kept per single zone.
"""
import dataclasses
import logging
import os
import typing

import pandas as pd

from . import modes

LOG = logging.getLogger(__name__)

HOUR = 3600.0
METERS_PER_MILE = 1609.344

OD_FILE = "skims_od.csv.gz"
RIDE_HAIL_FILE = "skims_ridehail.csv.gz"
PARKING_FILE = "skims_parking.csv.gz"

OD_COLUMNS = ["mode", "origin", "destination", "hour", "mean_time",
              "mean_cost", "mean_distance", "mean_transfers", "observations"]
RIDE_HAIL_COLUMNS = ["origin", "hour", "mean_wait", "cost_per_mile",
                     "unmatched_fraction", "observations"]
PARKING_COLUMNS = ["destination", "hour", "mean_cost", "mean_walk_distance",
                   "observations"]


@dataclasses.dataclass(frozen=True)
class ODSkimEntry:
    """
    Averages of trips between two zones in one hour

    * fallback: True when no trip was observed and the values are a
      straight-line estimate
    """
    mode: modes.Mode
    origin: str
    destination: str
    hour: int
    mean_time: float
    mean_cost: float
    mean_distance: float
    mean_transfers: float = 0.0
    observations: int = 0
    fallback: bool = False


@dataclasses.dataclass(frozen=True)
class RideHailSkimEntry:
    origin: str
    hour: int
    mean_wait: float
    cost_per_mile: float
    unmatched_fraction: float
    observations: int

    def __post_init__(self):
        if not 0.0 <= self.unmatched_fraction <= 1.0:
            raise ValueError("unmatched fraction not in [0, 1]")


@dataclasses.dataclass(frozen=True)
class ParkingSkimEntry:
    destination: str
    hour: int
    mean_cost: float
    mean_walk_distance: float
    observations: int


@dataclasses.dataclass(frozen=True)
class SkimSettings:
    """
    * carry_forward: weight of last iteration's value in the new one; cells
      not observed this iteration survive only when it is positive, decaying
      toward the straight-line estimate
    * intrazonal_distance: meters assumed for trips within one zone
    * default_speeds: Mode -> m/s for straight-line estimates
    * default_cost_per_meter: Mode -> dollars per meter
    """
    carry_forward: float = 0.0
    intrazonal_distance: float = 500.0
    default_speeds: typing.Mapping[modes.Mode, float] = dataclasses.field(
            default_factory=dict)
    default_cost_per_meter: typing.Mapping[modes.Mode, float] = \
        dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.carry_forward < 1.0:
            raise ValueError("carry-forward weight must be in [0, 1)")

    @classmethod
    def from_config(cls, config):
        return cls(
                carry_forward=float(config["skims.carryForwardWeight"]),
                intrazonal_distance=float(
                    config["skims.intrazonalDistanceMeters"]),
                default_speeds={modes.Mode.parse(k): float(v) for k, v in
                                config["skims.defaultSpeeds"].items()},
                default_cost_per_meter={
                    modes.Mode.parse(k): float(v) for k, v in
                    config["skims.defaultCostPerMeter"].items()})


def hour_of(time):
    return int(time // HOUR)


def _blend(previous, current, keys, values, weight, estimate=None):
    """
    Mix last iteration's cells into this iteration's

    Cells not observed this iteration keep their old values, or decay toward
    estimate(cells) when it is given.
    """
    if previous.empty or weight == 0.0:
        return current.reset_index(drop=True)
    if current.empty:
        current = previous.iloc[:0]
    merged = current.merge(previous, on=keys, how="outer",
                           suffixes=("", "_previous"), indicator=True)
    both = merged["_merge"] == "both"
    carried = merged["_merge"] == "right_only"
    fresh = estimate(merged[carried]) if estimate is not None else None
    for column in values:
        old = merged[f"{column}_previous"]
        merged.loc[both, column] = weight * old[both] + \
            (1.0 - weight) * merged.loc[both, column]
        merged.loc[carried, column] = old[carried] if fresh is None else \
            weight * old[carried] + (1.0 - weight) * fresh[column]
    merged.loc[carried, "observations"] = \
        merged.loc[carried, "observations_previous"]
    merged["observations"] = merged["observations"].astype(int)
    return merged[keys + values + ["observations"]].sort_values(
            keys).reset_index(drop=True)


class Skims:
    """Recorded observations of the running iteration and the last tables"""

    def __init__(self, centroids, settings=SkimSettings()):
        """
        Initialiser

        Args:
            centroids (dict): TAZ id -> Point
            settings (SkimSettings): averaging and fallback settings
        """
        self.centroids = centroids
        self.settings = settings
        self.od = pd.DataFrame(columns=OD_COLUMNS)
        self.ride_hail = pd.DataFrame(columns=RIDE_HAIL_COLUMNS)
        self.parking = pd.DataFrame(columns=PARKING_COLUMNS)
        self._od_cells = {}
        self._rh_cells = {}
        self._parking_cells = {}
        self._trips = []
        self._requests = []
        self._stays = []

    def record(self, mode, origin, destination, depart_time, time, cost,
               distance, transfers=0):
        """Record one completed trip"""
        self._trips.append((modes.Mode(mode).value, origin, destination,
                            hour_of(depart_time), float(time), float(cost),
                            float(distance), float(transfers)))

    def record_ride_hail(self, origin, request_time, wait=None, price=0.0,
                         distance=0.0):
        """Record one ride-hail request, unmatched when wait is None"""
        self._requests.append((origin, hour_of(request_time), wait,
                               float(price), float(distance)))

    def record_parking(self, destination, arrival_time, cost, walk_distance):
        self._stays.append((destination, hour_of(arrival_time), float(cost),
                            float(walk_distance)))

    def finalize_iteration(self):
        """Average this iteration's observations into new tables"""
        weight = self.settings.carry_forward
        keys = ["mode", "origin", "destination", "hour"]
        trips = pd.DataFrame(self._trips, columns=keys + [
                "mean_time", "mean_cost", "mean_distance", "mean_transfers"])
        current = trips.groupby(keys, as_index=False).agg(
                mean_time=("mean_time", "mean"),
                mean_cost=("mean_cost", "mean"),
                mean_distance=("mean_distance", "mean"),
                mean_transfers=("mean_transfers", "mean"),
                observations=("mean_time", "size"))
        self.od = _blend(self.od, current, keys, OD_COLUMNS[4:8], weight,
                         self._estimates)

        requests = pd.DataFrame(self._requests, columns=[
                "origin", "hour", "wait", "price", "distance"])
        requests["wait"] = pd.to_numeric(requests["wait"])
        requests["unmatched"] = requests["wait"].isna().astype(float)
        matched = requests.dropna(subset=["wait"])
        grouped = requests.groupby(["origin", "hour"])
        current = pd.DataFrame({
            "unmatched_fraction": grouped["unmatched"].mean(),
            "observations": grouped.size(),
        })
        sums = matched.groupby(["origin", "hour"]).agg(
                mean_wait=("wait", "mean"), price=("price", "sum"),
                distance=("distance", "sum"))
        miles = sums["distance"] / METERS_PER_MILE
        current["mean_wait"] = sums["mean_wait"]
        current["cost_per_mile"] = (sums["price"] / miles).where(miles > 0,
                                                                  0.0)
        current = current.reset_index()[RIDE_HAIL_COLUMNS]
        self.ride_hail = _blend(self.ride_hail, current, ["origin", "hour"],
                                RIDE_HAIL_COLUMNS[2:5], weight)

        stays = pd.DataFrame(self._stays, columns=[
                "destination", "hour", "mean_cost", "mean_walk_distance"])
        current = stays.groupby(["destination", "hour"], as_index=False).agg(
                mean_cost=("mean_cost", "mean"),
                mean_walk_distance=("mean_walk_distance", "mean"),
                observations=("mean_cost", "size"))
        self.parking = _blend(self.parking, current, ["destination", "hour"],
                              PARKING_COLUMNS[2:4], weight)

        self._trips, self._requests, self._stays = [], [], []
        self._index()
        LOG.info("skims: %d od cells, %d ride-hail cells, %d parking cells",
                 len(self.od), len(self.ride_hail), len(self.parking))

    def _index(self):
        self._od_cells = {}
        for row in self.od.itertuples(index=False):
            mode = modes.Mode(row.mode)
            self._od_cells.setdefault((mode, row.origin, row.destination),
                                      {})[int(row.hour)] = ODSkimEntry(
                    mode, row.origin, row.destination, int(row.hour),
                    float(row.mean_time), float(row.mean_cost),
                    float(row.mean_distance), float(row.mean_transfers),
                    int(row.observations))
        self._rh_cells = {
            (row.origin, int(row.hour)): RideHailSkimEntry(
                row.origin, int(row.hour),
                float(row.mean_wait), float(row.cost_per_mile),
                float(row.unmatched_fraction), int(row.observations))
            for row in self.ride_hail.itertuples(index=False)}
        self._parking_cells = {
            (row.destination, int(row.hour)): ParkingSkimEntry(
                row.destination, int(row.hour), float(row.mean_cost),
                float(row.mean_walk_distance), int(row.observations))
            for row in self.parking.itertuples(index=False)}

    def distance(self, origin, destination):
        if origin == destination:
            return self.settings.intrazonal_distance
        meters = self.centroids[origin].distance_to(self.centroids[destination])
        return meters if meters > 0 else self.settings.intrazonal_distance

    def lookup(self, mode, origin, destination, time):
        """
        Skim of a zone pair at a time of day

        Falls back to the same cell at the nearest observed hour, then to a
        straight-line estimate at the mode's default speed.

        Args:
            mode (modes.Mode): trip mode
            origin, destination (str): TAZ ids
            time (float): seconds from midnight

        Returns:
            ODSkimEntry: the entry
        """
        mode = modes.Mode(mode)
        hour = hour_of(time)
        cells = self._od_cells.get((mode, origin, destination))
        if cells:
            if hour in cells:
                return cells[hour]
            nearest = min(cells, key=lambda h: (abs(h - hour), h))
            return cells[nearest]
        LOG.debug("skim fallback for %s %s->%s", mode.value, origin,
                  destination)
        return self.straight_line(mode, origin, destination, hour)

    def straight_line(self, mode, origin, destination, hour):
        """Straight-line skim at the mode's default speed and cost"""
        mode = modes.Mode(mode)
        meters = self.distance(origin, destination)
        speed = self.settings.default_speeds.get(mode, 1.4)
        return ODSkimEntry(
                mode, origin, destination, int(hour), meters / speed,
                meters * self.settings.default_cost_per_meter.get(mode, 0.0),
                meters, 0.0, 0, fallback=True)

    def _estimates(self, cells):
        entries = [self.straight_line(row.mode, row.origin, row.destination,
                                      row.hour)
                   for row in cells.itertuples(index=False)]
        return pd.DataFrame(
                [(e.mean_time, e.mean_cost, e.mean_distance, e.mean_transfers)
                 for e in entries],
                columns=OD_COLUMNS[4:8], index=cells.index, dtype=float)

    def speed(self, mode, origin, destination, time):
        """Observed door-to-door speed, in m/s"""
        entry = self.lookup(mode, origin, destination, time)
        if entry.mean_time <= 0 or entry.mean_distance <= 0:
            return self.settings.default_speeds.get(modes.Mode(mode), 1.4)
        return entry.mean_distance / entry.mean_time

    def lookup_ride_hail(self, origin, time):
        return self._rh_cells.get((origin, hour_of(time)))

    def lookup_parking(self, destination, time):
        return self._parking_cells.get((destination, hour_of(time)))

    def export(self, directory):
        """Write the finalized tables as long-format csv"""
        os.makedirs(directory, exist_ok=True)
        for frame, name in ((self.od, OD_FILE),
                            (self.ride_hail, RIDE_HAIL_FILE),
                            (self.parking, PARKING_FILE)):
            frame.to_csv(os.path.join(directory, name), index=False,
                         compression={"method": "gzip", "mtime": 0})

    def import_(self, directory):
        """Warm start from tables written by export"""
        def read(name, columns):
            path = os.path.join(directory, name)
            if not os.path.exists(path):
                return pd.DataFrame(columns=columns)
            frame = pd.read_csv(path, float_precision="round_trip",
                                keep_default_na=True,
                                dtype={"origin": str, "destination": str})
            return frame[columns]
        self.od = read(OD_FILE, OD_COLUMNS)
        self.ride_hail = read(RIDE_HAIL_FILE, RIDE_HAIL_COLUMNS)
        self.parking = read(PARKING_FILE, PARKING_COLUMNS)
        self._index()
        return self
