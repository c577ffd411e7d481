"""Event log and the tables derived from it"""
import itertools
import logging
import math
import os

import numpy as np
import pandas as pd

LOG = logging.getLogger(__name__)

METERS_PER_MILE = 1609.344

# Attributes every event of a type carries
EVENT_FIELDS = {
    "PathTraversal": ("vehicle", "vehicleType", "mode", "numPassengers",
                      "departureTime", "arrivalTime", "length"),
    "ModeChoice": ("person", "mode"),
    "Replanning": ("person", "reason"),
    "ReservesParking": ("vehicle", "parkingZone", "cost"),
    "ChargingPlugIn": ("vehicle", "chargingPower", "primaryFuelLevel"),
    "ChargingPlugOut": ("vehicle", "chargingPower", "primaryFuelLevel"),
    "PersonEntersVehicle": ("person", "vehicle"),
    "PersonLeavesVehicle": ("person", "vehicle"),
    "ActivityStart": ("person", "actType"),
    "ActivityEnd": ("person", "actType"),
    "PersonCost": ("person", "cost"),
    "OutOfFuel": ("vehicle",),
}

CAR_LIKE = frozenset({"car", "cav", "ride_hail"})

RIDE_HAIL_CHOICES = frozenset({"RIDE_HAIL", "RIDE_HAIL_POOLED",
                               "RIDE_HAIL_TRANSIT"})


def _gzip(path):
    if path.endswith(".gz"):
        return {"method": "gzip", "mtime": 0}
    return None


class EventLog:
    """
    Collects simulation events in emission order

    Events are kept as dictionaries and ordered by (time, emission sequence)
    when turned into a table.
    """

    def __init__(self, end_time=math.inf):
        self.end_time = end_time
        self._rows = []
        self._sequence = itertools.count()

    def __len__(self):
        return len(self._rows)

    def emit(self, time, event_type, **attributes):
        """
        Record an event

        Args:
            time (float): seconds from midnight
            event_type (str): one of EVENT_FIELDS
            attributes: the event's fields

        Raises:
            ValueError: unknown type, missing field or time outside the day
        """
        fields = EVENT_FIELDS.get(event_type)
        if fields is None:
            raise ValueError(f"unknown event type {event_type}")
        missing = [f for f in fields if f not in attributes]
        if missing:
            raise ValueError(f"{event_type} event lacks {', '.join(missing)}")
        if not 0.0 <= time <= self.end_time:
            raise ValueError(f"{event_type} event at {time} outside the day")
        row = {"time": float(time), "type": event_type, "_sequence":
               next(self._sequence)}
        row.update(attributes)
        self._rows.append(row)

    def of_type(self, event_type):
        return [r for r in self._rows if r["type"] == event_type]

    def to_frame(self):
        """Events sorted by time, one column per attribute"""
        if not self._rows:
            return pd.DataFrame(columns=["time", "type"])
        frame = pd.DataFrame(self._rows).sort_values(
                ["time", "_sequence"], kind="stable")
        attributes = sorted(set(frame.columns) - {"time", "type",
                                                  "_sequence"})
        return frame[["time", "type"] + attributes].reset_index(drop=True)


def write_events(events, path):
    """
    Write the event log as csv, gzipped when the path ends in .gz

    Args:
        events (EventLog or pandas.DataFrame): the events
        path (str): output file
    """
    frame = events.to_frame() if isinstance(events, EventLog) else events
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    frame.to_csv(path, index=False, compression=_gzip(path))


def read_events(path):
    return pd.read_csv(path, float_precision="round_trip", low_memory=False,
                       dtype={"person": str, "vehicle": str})


def column(frame, name, default=np.nan):
    if name in frame.columns:
        return frame[name]
    return pd.Series(default, index=frame.index)


def numeric(frame, name):
    return pd.to_numeric(column(frame, name), errors="coerce").fillna(0.0)


def completed_trips(events):
    """
    The mode each completed trip was made with

    A trip is the last mode choice of a person before they start their
    next activity.

    Returns:
        pandas.DataFrame: person, time (arrival), mode
    """
    starts = events[(events["type"] == "ActivityStart")
                    & (events["time"] > 0)][["time", "person"]]
    choices = events[events["type"] == "ModeChoice"][["time", "person",
                                                      "mode"]]
    if starts.empty or choices.empty:
        return pd.DataFrame(columns=["person", "time", "mode"])
    choices = choices.rename(columns={"time": "chosen"})
    paired = pd.merge_asof(starts.sort_values("time"),
                           choices.sort_values("chosen"),
                           left_on="time", right_on="chosen", by="person",
                           direction="backward")
    paired = paired.dropna(subset=["mode"])
    return paired[["person", "time", "mode"]].reset_index(drop=True)


def ride_hail_service(events):
    """
    Ride-hail requests, unmatched requests and mean wait in seconds

    A request is a ride-hail mode choice; it is unmatched when it ends in
    replanning and its wait runs from the choice to boarding.
    """
    choices = events[(events["type"] == "ModeChoice")
                     & column(events, "mode").isin(RIDE_HAIL_CHOICES)]
    reasons = column(events, "reason").fillna("").astype(str)
    unmatched = int(((events["type"] == "Replanning")
                     & reasons.str.startswith("ride-hail")).sum())
    boardings = events[(events["type"] == "PersonEntersVehicle")
                       & (column(events, "vehicleMode") == "ride_hail")]
    wait = math.nan
    if len(boardings) and len(choices):
        paired = pd.merge_asof(
                boardings[["time", "person"]].sort_values("time"),
                choices[["time", "person"]].rename(
                    columns={"time": "chosen"}).sort_values("chosen"),
                left_on="time", right_on="chosen", by="person",
                direction="backward")
        waits = (paired["time"] - paired["chosen"]).dropna()
        if len(waits):
            wait = float(waits.mean())
    return len(choices), unmatched, wait


def summarize(events, iteration):
    """
    Day-level metrics of one iteration

    Every value is computed from the event log alone.

    Args:
        events (pandas.DataFrame): the day's events
        iteration (int): iteration number

    Returns:
        dict: one summaryStats row
    """
    traversals = events[events["type"] == "PathTraversal"]
    mode = column(traversals, "mode").astype(str)
    duration = numeric(traversals, "arrivalTime") - \
        numeric(traversals, "departureTime")

    car = traversals[mode.isin(CAR_LIKE)]
    free = numeric(car, "freeFlowTime")
    delay = ((duration[car.index] - free).clip(lower=0.0)).sum()

    buses = traversals[mode == "transit"]
    standees = (numeric(buses, "numPassengers")
                - numeric(buses, "seatingCapacity")).clip(lower=0.0)
    crowded = (standees * duration[buses.index]).sum()

    requests, unmatched, wait = ride_hail_service(events)

    row = {
        "iteration": iteration,
        "rideHailRequests": requests,
        "noRideHailRequests": requests == 0,
        "unmatchedRideHailFraction": unmatched / requests if requests else 0.0,
        "averageRideHailWaitMin": wait / 60.0,
        "totalVehicleDelayHours": float(delay) / 3600.0,
        "crowdedTransitHours": float(crowded) / 3600.0,
        "vehicleMilesTraveled": float(numeric(car, "length").sum())
        / METERS_PER_MILE,
    }
    for store in ("primary", "secondary"):
        fuel = pd.DataFrame({
            "type": column(traversals, f"{store}FuelType"),
            "joules": numeric(traversals, f"{store}Fuel")}).dropna()
        for fuel_type, joules in fuel.groupby("type")["joules"].sum().items():
            key = f"fuelConsumedGJ_{fuel_type}"
            row[key] = row.get(key, 0.0) + float(joules) / 1e9
    return row


def mode_split(events):
    """Completed trips per mode"""
    trips = completed_trips(events)
    return trips.groupby("mode").size().sort_index()


def mode_split_series(per_iteration):
    """
    Mode split of several iterations

    Args:
        per_iteration (dict): iteration -> events frame or mode counts

    Returns:
        pandas.DataFrame: iteration, mode, trips
    """
    rows = []
    for iteration in sorted(per_iteration):
        counts = per_iteration[iteration]
        if isinstance(counts, pd.DataFrame):
            counts = mode_split(counts)
        rows += [(iteration, mode, int(n)) for mode, n in counts.items()]
    return pd.DataFrame(rows, columns=["iteration", "mode", "trips"])


def plot_mode_split(series, path):
    """Line chart of trips per mode over iterations, written as svg"""
    import matplotlib  # pylint: disable=import-outside-toplevel
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt  # pylint: disable=import-outside-toplevel

    table = series.pivot(index="iteration", columns="mode",
                         values="trips").fillna(0)
    fig, ax = plt.subplots(figsize=(8, 5))
    for mode in table.columns:
        ax.plot(table.index, table[mode], marker="o", label=mode)
    ax.set_xlabel("iteration")
    ax.set_ylabel("completed trips")
    ax.legend(loc="upper left", bbox_to_anchor=(1.0, 1.0), fontsize="small")
    fig.savefig(path, format="svg", bbox_inches="tight",
                metadata={"Date": None})
    plt.close(fig)


def vmt_pmt(events, group_by="mode", taz_of=None):
    """
    Vehicle and person miles travelled

    Args:
        events (pandas.DataFrame): the day's events
        group_by (str): mode, vehicleType, hour or taz (of the start point)
        taz_of (callable): Point-like (x, y) -> TAZ id, for taz grouping

    Returns:
        pandas.DataFrame: the group column, vmt and pmt
    """
    traversals = events[events["type"] == "PathTraversal"]
    miles = numeric(traversals, "length") / METERS_PER_MILE
    frame = pd.DataFrame({
        "vmt": miles,
        "pmt": miles * numeric(traversals, "numPassengers"),
    })
    if group_by == "hour":
        frame["hour"] = (numeric(traversals, "departureTime")
                         // 3600).astype(int)
    elif group_by == "taz":
        if taz_of is None:
            raise ValueError("taz grouping needs taz_of")
        frame["taz"] = [taz_of(x, y) for x, y in zip(
            numeric(traversals, "startX"), numeric(traversals, "startY"))]
    elif group_by in ("mode", "vehicleType"):
        frame[group_by] = column(traversals, group_by)
    else:
        raise ValueError(f"cannot group by {group_by}")
    return frame.groupby(group_by, as_index=False)[["vmt", "pmt"]].sum()


def append_row(row, path):
    """Append a dict as one row of a csv, writing the header the first time"""
    frame = pd.DataFrame([row])
    if os.path.exists(path):
        existing = pd.read_csv(path)
        frame = pd.concat([existing, frame], ignore_index=True)
    frame.to_csv(path, index=False)
    return frame


def path_traversal(events, leg, vehicle_id, vehicle_type, passengers, before,
                   after, free_flow_time=0.0, **extra):
    """
    Record a vehicle moving along a leg

    Args:
        events (EventLog): event sink
        leg (router.ItineraryLeg): the movement
        vehicle_id (str): the vehicle
        vehicle_type (scenario.VehicleType): its type
        passengers (int): persons on board, driver included for private
            vehicles
        before, after (energy.FuelState): levels around the leg
        free_flow_time (float): uncongested seconds of the link path
        extra: further attributes
    """
    secondary = vehicle_type.secondary_fuel
    events.emit(
            leg.arrive, "PathTraversal", vehicle=vehicle_id,
            vehicleType=vehicle_type.id, mode=leg.mode.value,
            numPassengers=passengers, departureTime=leg.depart,
            arrivalTime=leg.arrive, length=leg.distance,
            links="|".join(leg.links), freeFlowTime=free_flow_time,
            primaryFuelType=vehicle_type.primary_fuel.value,
            primaryFuel=before.primary - after.primary,
            secondaryFuelType=secondary.value if secondary else None,
            secondaryFuel=before.secondary - after.secondary,
            primaryFuelLevel=after.primary,
            seatingCapacity=vehicle_type.seating_capacity,
            startX=leg.start.x, startY=leg.start.y, endX=leg.end.x,
            endY=leg.end.y, **extra)
