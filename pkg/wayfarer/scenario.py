"""Scenario inputs: population, plans, vehicles, network, transit, parking"""
import dataclasses
import enum
import logging
import math
import os
import re
import typing

import networkx as nx
import numpy as np
import pandas as pd

from . import errors
from . import modes
from . import network
from . import transit
from .geometry import Point

LOG = logging.getLogger(__name__)

MANDATORY_ACTIVITIES = frozenset({"work", "school"})


class MissingFile(errors.InputError):
    """A mandatory input file does not exist"""


class DanglingReference(errors.InputError):
    """A row refers to an id that is defined nowhere"""


class SchemaError(errors.InputError):
    """A table lacks a column or holds a value of the wrong kind"""


class BadProbability(errors.InputError):
    """A sample probability string is malformed or its weights do not sum to 1"""


class FuelType(enum.Enum):
    GASOLINE = "Gasoline"
    DIESEL = "Diesel"
    ELECTRICITY = "Electricity"
    BIODIESEL = "Biodiesel"
    FOOD = "Food"
    UNDEFINED = "Undefined"


class VehicleCategory(enum.Enum):
    BODY = "Body"
    BIKE = "Bike"
    CAR = "Car"
    MEDIUM_DUTY_PASSENGER = "MediumDutyPassenger"
    LIGHT_DUTY_TRUCK = "LightDutyTruck"
    HEAVY_DUTY_TRUCK = "HeavyDutyTruck"


HEAVY_DUTY = frozenset({VehicleCategory.MEDIUM_DUTY_PASSENGER,
                        VehicleCategory.HEAVY_DUTY_TRUCK})

HOUSEHOLD_CAR_CATEGORIES = frozenset({VehicleCategory.CAR,
                                      VehicleCategory.LIGHT_DUTY_TRUCK})


@dataclasses.dataclass(frozen=True)
class VehicleType:
    """
    Physical and energy characteristics shared by vehicles of one type

    * seating_capacity, standing_capacity: persons
    * length: meters
    * primary_consumption, secondary_consumption: joules per meter
    * primary_capacity, secondary_capacity: joules
    * charging_power: kW accepted from a plug, None if not pluggable
    * sample_probability_string: household or fleet sampling weights
    """
    id: str
    seating_capacity: int
    standing_capacity: int = 0
    length: float = 4.5
    primary_fuel: FuelType = FuelType.GASOLINE
    primary_consumption: float = 0.0
    primary_capacity: float = 0.0
    secondary_fuel: typing.Optional[FuelType] = None
    secondary_consumption: typing.Optional[float] = None
    secondary_capacity: typing.Optional[float] = None
    automation_level: int = 1
    category: VehicleCategory = VehicleCategory.CAR
    charging_power: typing.Optional[float] = None
    sample_probability_string: typing.Optional[str] = None

    def __post_init__(self):
        if self.category is not VehicleCategory.BODY:
            if self.primary_consumption <= 0:
                raise SchemaError(
                        f"vehicle type {self.id} needs a positive primary "
                        f"consumption")
            if self.primary_capacity <= 0:
                raise SchemaError(
                        f"vehicle type {self.id} needs a positive primary "
                        f"capacity")
        if self.secondary_fuel is not None and not (
                self.secondary_capacity and self.secondary_capacity > 0):
            raise SchemaError(
                    f"vehicle type {self.id} has a secondary fuel without "
                    f"capacity")
        if not 1 <= self.automation_level <= 5:
            raise SchemaError(
                    f"vehicle type {self.id} automation level "
                    f"{self.automation_level} not in 1-5")

    @property
    def capacity(self):
        return self.seating_capacity + self.standing_capacity

    @property
    def electric(self):
        return self.primary_fuel is FuelType.ELECTRICITY

    @property
    def heavy_duty(self):
        return self.category in HEAVY_DUTY


BODY_TYPE = VehicleType(id="BODY-TYPE-DEFAULT", seating_capacity=1,
                        length=0.5, primary_fuel=FuelType.FOOD,
                        category=VehicleCategory.BODY)


@dataclasses.dataclass(frozen=True)
class Vehicle:
    id: str
    type_id: str
    household_id: typing.Optional[str] = None
    state_of_charge: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.state_of_charge <= 1.0:
            raise SchemaError(
                    f"vehicle {self.id} state of charge {self.state_of_charge} "
                    f"not in [0, 1]")


@dataclasses.dataclass(frozen=True)
class Activity:
    """
    * type: activity label such as home, work or shopping
    * location: planar coordinates
    * taz: zone of the location
    * end_time: seconds from midnight, None for the last activity
    * tour_id: tour label from the input, if any
    """
    type: str
    location: Point
    taz: str
    end_time: typing.Optional[float] = None
    tour_id: typing.Optional[str] = None

    @property
    def mandatory(self):
        return self.type in MANDATORY_ACTIVITIES


@dataclasses.dataclass(frozen=True)
class Leg:
    """
    * mode: trip mode fixed for the next execution, None to choose
    * tour_id: tour label from the input, if any
    * route: car link path of the last execution, reused until cleared
    """
    mode: typing.Optional[modes.Mode] = None
    tour_id: typing.Optional[str] = None
    route: typing.Tuple[str, ...] = ()


@dataclasses.dataclass(frozen=True)
class BlankSubtour:
    """
    Room for one discretionary subtour, to be filled before the day

    * after: index of the activity the subtour leaves from
    * window_start, window_end: hours the subtour must fit in
    """
    after: int
    window_start: float
    window_end: float


@dataclasses.dataclass(frozen=True)
class Plan:
    """
    A day of alternating activities and legs

    * elements: Activity, Leg, Activity, ... Activity
    * score: experienced utility of the last execution, None if unscored
    * selected: whether this is the plan executed next
    * blanks: discretionary subtours waiting to be filled
    """
    elements: typing.Tuple[typing.Union[Activity, Leg], ...]
    score: typing.Optional[float] = None
    selected: bool = True
    blanks: typing.Tuple[BlankSubtour, ...] = ()

    @property
    def activities(self):
        return self.elements[::2]

    @property
    def legs(self):
        return self.elements[1::2]

    def trips(self):
        """(origin activity, leg, destination activity) triples"""
        acts, legs = self.activities, self.legs
        return list(zip(acts, legs, acts[1:]))

    def check(self, owner="plan"):
        """Raise SchemaError unless the plan is a valid alternation"""
        if not self.elements:
            raise SchemaError(f"{owner} is empty")
        for index, element in enumerate(self.elements):
            expected = Activity if index % 2 == 0 else Leg
            if not isinstance(element, expected):
                raise SchemaError(
                        f"{owner} element {index} should be an "
                        f"{expected.__name__.lower()}")
        if not isinstance(self.elements[-1], Activity):
            raise SchemaError(f"{owner} must end with an activity")
        last = -math.inf
        for activity in self.activities[:-1]:
            if activity.end_time is None:
                raise SchemaError(
                        f"{owner} has a {activity.type} activity without an "
                        f"end time")
            if activity.end_time < last:
                raise SchemaError(f"{owner} activity end times decrease")
            last = activity.end_time


@dataclasses.dataclass(frozen=True)
class Person:
    id: str
    household_id: str
    age: int
    value_of_time: typing.Optional[float]
    plan: Plan


@dataclasses.dataclass(frozen=True)
class Household:
    """
    * income: dollars per year
    * home: coordinates of the residence
    * num_vehicles, num_bikes: owned counts used when vehicles are sampled
    """
    id: str
    income: float
    home_taz: str
    home: Point
    member_ids: typing.Tuple[str, ...] = ()
    vehicle_ids: typing.Tuple[str, ...] = ()
    num_vehicles: int = 1
    num_bikes: int = 0

    def __post_init__(self):
        if self.income < 0:
            raise SchemaError(f"household {self.id} has negative income")


@dataclasses.dataclass(frozen=True)
class TimeRestriction:
    """Stall reserved for a vehicle category between two times of day"""
    category: VehicleCategory
    start: float
    end: float

    def allows(self, category, time):
        if category is not self.category:
            return False
        t = time % 86400.0
        if self.start <= self.end:
            return self.start <= t < self.end
        return t >= self.start or t < self.end


@dataclasses.dataclass(frozen=True)
class ParkingStallDescriptor:
    """
    A group of identical stalls

    * zone: TAZ id or link id, by manager resolution
    * parking_type: residential, workplace or public
    * pricing: fixed or hourly
    * cost: dollars (per hour for hourly pricing)
    * charger_power: kW, None without a charger
    * manager: (manager type, manager id)
    """
    zone: str
    parking_type: str
    pricing: str
    cost: float
    count: int
    charger_power: typing.Optional[float] = None
    location: typing.Optional[Point] = None
    manager: typing.Tuple[str, str] = ("TAZ", "default")
    restriction: typing.Optional[TimeRestriction] = None

    def __post_init__(self):
        if self.cost < 0:
            raise SchemaError(f"parking in {self.zone} has negative cost")
        if self.parking_type not in ("residential", "workplace", "public"):
            raise SchemaError(f"unknown parking type {self.parking_type}")
        if self.pricing not in ("fixed", "hourly"):
            raise SchemaError(f"unknown pricing model {self.pricing}")
        if self.count < 0:
            raise SchemaError(f"parking in {self.zone} has negative count")


@dataclasses.dataclass(frozen=True)
class Geofence:
    center: Point
    radius: float

    def contains(self, point):
        return self.center.distance_to(point) <= self.radius


@dataclasses.dataclass(frozen=True)
class OnDemandVehicle:
    """A ride-hail vehicle at the start of the day"""
    id: str
    type_id: str
    location: Point
    state_of_charge: float = 1.0
    geofence: typing.Optional[Geofence] = None
    shift: typing.Optional[typing.Tuple[float, float]] = None
    fleet_id: str = "default"


@dataclasses.dataclass(frozen=True)
class OnDemandFleetSpec:
    """
    A ride-hail provider

    * ratio: on-demand vehicles per household vehicle, for procedural fleets
    * explicit: the vehicles listed in ridehail_fleet.csv, otherwise
    * vehicle_type_id: type for procedural vehicles, sampled when None
    * shift: (start, end) seconds for procedural human-driven vehicles
    * repositioning: repositioning strategy name, the global one when None
    """
    id: str
    ratio: typing.Optional[float] = None
    explicit: typing.Tuple[OnDemandVehicle, ...] = ()
    vehicle_type_id: typing.Optional[str] = None
    shift: typing.Optional[typing.Tuple[float, float]] = None
    geofence: typing.Optional[Geofence] = None
    repositioning: typing.Optional[str] = None

    def __post_init__(self):
        if self.ratio is not None and self.ratio <= 0:
            raise SchemaError(f"ride-hail fleet {self.id} needs a positive "
                              f"ratio")

    @property
    def procedural(self):
        return self.ratio is not None


@dataclasses.dataclass(frozen=True)
class Dock:
    id: str
    location: Point
    capacity: int


SHARING_STRATEGIES = ("fixed-non-reserving-fleet-by-TAZ",
                      "fixed-non-reserving", "inexhaustible-reserving")


@dataclasses.dataclass(frozen=True)
class SharedFleetSpec:
    """
    A shared vehicle service

    * mode: SHARED_BIKE or SHARED_CAR
    * strategy: one of SHARING_STRATEGIES
    * size: vehicles placed by home density
    * taz_counts: vehicles per TAZ for the by-TAZ strategy
    * docks: docking stations, empty for dockless fleets
    * search_radius: meters searched for an available vehicle
    * round_trip: vehicles must come back where they were taken
    * price_per_minute: usage charge in dollars
    """
    id: str
    vehicle_type_id: str
    mode: modes.Mode
    strategy: str
    size: int = 0
    taz_counts: typing.Mapping[str, int] = dataclasses.field(
            default_factory=dict)
    docks: typing.Tuple[Dock, ...] = ()
    search_radius: float = 500.0
    round_trip: bool = False
    price_per_minute: float = 0.0

    def __post_init__(self):
        if self.strategy not in SHARING_STRATEGIES:
            raise SchemaError(f"unknown sharing strategy {self.strategy}")
        if self.mode not in modes.SHARED_MODES:
            raise SchemaError(f"shared fleet {self.id} mode must be shared")


@dataclasses.dataclass(frozen=True)
class Scenario:
    """Everything a run needs, cross-referenced and immutable after load"""
    households: typing.Dict[str, Household]
    persons: typing.Dict[str, Person]
    vehicle_types: typing.Dict[str, VehicleType]
    vehicles: typing.Dict[str, Vehicle]
    network: network.Network
    timetable: typing.Optional[transit.Timetable] = None
    parking: typing.Tuple[ParkingStallDescriptor, ...] = ()
    ridehail_fleets: typing.Tuple[OnDemandFleetSpec, ...] = ()
    ridehail_vehicles: typing.Tuple[OnDemandVehicle, ...] = ()
    shared_fleets: typing.Tuple[SharedFleetSpec, ...] = ()
    activity_intercepts: typing.Optional[pd.DataFrame] = None
    activity_params: typing.Optional[pd.DataFrame] = None
    transit_tables: typing.Optional[typing.Dict[str, pd.DataFrame]] = None

    def vehicle_type_of(self, vehicle_id):
        return self.vehicle_types[self.vehicles[vehicle_id].type_id]

    @property
    def household_vehicle_count(self):
        return sum(1 for v in self.vehicles.values()
                   if v.household_id is not None
                   and self.vehicle_types[v.type_id].category
                   in HOUSEHOLD_CAR_CATEGORIES)


# Table readers


def _read(directory, name, columns, ids=(), required=True):
    path = os.path.join(directory, name)
    if not os.path.exists(path):
        if required:
            raise MissingFile(f"required input {path} is missing")
        return None
    frame = pd.read_csv(path, dtype={c: str for c in ids},
                        keep_default_na=True)
    for column in columns:
        if column not in frame.columns:
            raise SchemaError(f"{name} is missing column {column}")
    return frame


def _numbers(frame, name, column, default=None):
    if column not in frame.columns:
        if default is None:
            raise SchemaError(f"{name} is missing column {column}")
        return pd.Series(default, index=frame.index, dtype=float)
    try:
        values = pd.to_numeric(frame[column])
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{name} column {column} is not numeric") from exc
    if default is not None:
        values = values.fillna(default)
    return values.astype(float)


def _text(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    text = str(value).strip()
    return text or None


def _clock(text):
    hours, minutes = text.strip().split(":")
    return int(hours) * 3600.0 + int(minutes) * 60.0


def parse_time_restriction(text):
    """
    Parse ``VEHICLE_CATEGORY|HH:MM-HH:MM``

    Returns:
        TimeRestriction: or None for an empty value
    """
    text = _text(text)
    if text is None:
        return None
    try:
        category, window = text.split("|")
        start, end = window.split("-")
        return TimeRestriction(VehicleCategory(category.strip()),
                               _clock(start), _clock(end))
    except ValueError as exc:
        raise SchemaError(f"bad parking time restriction '{text}'") from exc


def parse_manager(text):
    """Parse ``MANAGER_TYPE(MANAGER_ID)``"""
    text = _text(text)
    if text is None:
        return ("TAZ", "default")
    match = re.fullmatch(r"\s*(\w+)\s*\(\s*([^)]*?)\s*\)\s*", text)
    if match is None:
        raise SchemaError(f"bad parking manager '{text}'")
    return match.group(1).upper(), match.group(2)


def load_network(directory):
    """Read nodes.csv, tazs.csv, network.csv and capacity overrides"""
    nodes = _read(directory, "nodes.csv", ["node_id", "x", "y"],
                  ids=["node_id"])
    tazs = _read(directory, "tazs.csv", ["taz_id", "x", "y"], ids=["taz_id"])
    links = _read(directory, "network.csv",
                  ["link_id", "from_node", "to_node", "length_m",
                   "free_speed_mps", "capacity_vph", "lanes", "modes"],
                  ids=["link_id", "from_node", "to_node"])
    overrides = _read(directory, "link_capacity_overrides.csv",
                      ["link_id", "capacity_vph", "lanes"], ids=["link_id"],
                      required=False)
    override = {}
    if overrides is not None:
        for row in overrides.itertuples(index=False):
            override[row.link_id] = (float(row.capacity_vph),
                                     float(row.lanes))

    node_points = {row.node_id: Point(float(row.x), float(row.y))
                   for row in nodes.itertuples(index=False)}
    centroids = {row.taz_id: Point(float(row.x), float(row.y))
                 for row in tazs.itertuples(index=False)}
    grade = _numbers(links, "network.csv", "grade_pct", default=0.0)
    toll = _numbers(links, "network.csv", "toll_usd", default=0.0)
    parsed = []
    for i, row in enumerate(links.itertuples(index=False)):
        capacity, lanes = override.get(
                row.link_id, (float(row.capacity_vph), float(row.lanes)))
        for node in (row.from_node, row.to_node):
            if node not in node_points:
                raise DanglingReference(
                        f"link {row.link_id} references unknown node {node}")
        try:
            parsed.append(network.Link(
                    id=row.link_id,
                    from_node=row.from_node,
                    to_node=row.to_node,
                    length=float(row.length_m),
                    free_speed=float(row.free_speed_mps),
                    capacity=capacity,
                    lanes=lanes,
                    modes=frozenset(m.strip().lower()
                                    for m in str(row.modes).split("|")
                                    if m.strip()),
                    grade=float(grade.iloc[i]),
                    toll=float(toll.iloc[i])))
        except ValueError as exc:
            raise SchemaError(f"network.csv: {exc}") from exc
    for link_id in override:
        if link_id not in {link.id for link in parsed}:
            raise DanglingReference(
                    f"capacity override for unknown link {link_id}")
    if not centroids:
        raise SchemaError("tazs.csv defines no zones")
    return network.Network(node_points, parsed, centroids)


def _get(row, key, default):
    value = row.get(key)
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return default
    return value


def _fuel(value):
    text = _text(value)
    if text is None:
        return None
    try:
        return FuelType(text)
    except ValueError as exc:
        raise SchemaError(f"unknown fuel type {text}") from exc


def load_vehicle_types(directory):
    frame = _read(directory, "vehicletypes.csv",
                  ["vehicle_type_id", "seating_capacity", "primary_fuel",
                   "primary_consumption_j_per_m", "primary_capacity_j",
                   "category"], ids=["vehicle_type_id"])
    types = {}
    for row in frame.to_dict("records"):
        try:
            category = VehicleCategory(str(row["category"]).strip())
        except ValueError as exc:
            raise SchemaError(
                    f"vehicletypes.csv: unknown category {row['category']}") \
                from exc
        secondary = _fuel(row.get("secondary_fuel"))
        power = row.get("charging_power_kw")
        vehicle_type = VehicleType(
                id=row["vehicle_type_id"],
                seating_capacity=int(row["seating_capacity"]),
                standing_capacity=int(_get(row, "standing_capacity", 0)),
                length=float(_get(row, "length_m", 4.5)),
                primary_fuel=_fuel(row["primary_fuel"]) or FuelType.UNDEFINED,
                primary_consumption=float(row["primary_consumption_j_per_m"]),
                primary_capacity=float(row["primary_capacity_j"]),
                secondary_fuel=secondary,
                secondary_consumption=(
                    float(row["secondary_consumption_j_per_m"])
                    if secondary else None),
                secondary_capacity=(float(row["secondary_capacity_j"])
                                    if secondary else None),
                automation_level=int(_get(row, "automation_level", 1)),
                category=category,
                charging_power=(None if power is None or pd.isna(power)
                                else float(power)),
                sample_probability_string=_text(
                    row.get("sample_probability_string")))
        types[vehicle_type.id] = vehicle_type
    types.setdefault(BODY_TYPE.id, BODY_TYPE)
    return types


def load_plans(directory, persons, net):
    """
    Read plans.csv into one plan per person

    Returns:
        dict: person id -> Plan
    """
    frame = _read(directory, "plans.csv",
                  ["person_id", "elem_index", "elem_type", "activity_type",
                   "x", "y", "end_time", "mode"],
                  ids=["person_id", "taz", "tour_id"])
    unknown = sorted(set(frame["person_id"]) - set(persons))
    if unknown:
        raise DanglingReference(f"plans.csv references unknown person "
                                f"{unknown[0]}")
    frame = frame.sort_values(["person_id", "elem_index"], kind="stable")
    plans = {}
    for person_id, rows in frame.groupby("person_id", sort=True):
        elements = []
        for row in rows.to_dict("records"):
            kind = str(row["elem_type"]).strip().lower()
            if kind == "activity":
                point = Point(float(row["x"]), float(row["y"]))
                taz = _text(row.get("taz")) or net.taz_of(point)
                if taz not in net.tazs:
                    raise DanglingReference(
                            f"person {person_id} activity in unknown TAZ "
                            f"{taz}")
                end = row["end_time"]
                elements.append(Activity(
                        type=str(row["activity_type"]).strip(),
                        location=point,
                        taz=taz,
                        end_time=None if pd.isna(end) else float(end),
                        tour_id=_text(row.get("tour_id"))))
            elif kind == "leg":
                mode = _text(row["mode"])
                try:
                    parsed = modes.Mode.parse(mode) if mode else None
                except ValueError as exc:
                    raise SchemaError(
                            f"plans.csv: person {person_id} has unknown mode "
                            f"{mode}") from exc
                route = _text(row.get("route"))
                elements.append(Leg(
                        mode=parsed,
                        tour_id=_text(row.get("tour_id")),
                        route=tuple(route.split("|")) if route else ()))
            else:
                raise SchemaError(f"plans.csv: unknown element type {kind}")
        plan = Plan(tuple(elements))
        plan.check(f"plan of person {person_id}")
        plans[person_id] = plan
    return plans


def _probability_clause(text):
    return re.fullmatch(
            r"\s*(?:(?P<label>[A-Za-z_]+)\s+)?all\s*:\s*(?P<p>[0-9.]+)\s*"
            r"(?:;\s*income\s+(?P<lo>[0-9.]+)\s*-\s*(?P<hi>[0-9.]+)\s*:\s*"
            r"(?P<q>[0-9.]+)\s*)?",
            text)


@dataclasses.dataclass(frozen=True)
class SampleProbability:
    """Parsed ``[label ]all:P[; income X-Y:Q]``"""
    label: str
    base: float
    band: typing.Optional[typing.Tuple[float, float, float]] = None

    def weight(self, income):
        if self.band is not None:
            low, high, weight = self.band
            if low <= income <= high:
                return weight
        return self.base


def parse_sample_probability(text):
    """
    Parse a sample probability string

    Args:
        text (str): e.g. ``ridehail all:0.2; income 0-50000:0.5``

    Returns:
        SampleProbability: label ``household`` unless one is given
    """
    match = _probability_clause(text)
    if match is None:
        raise BadProbability(f"cannot parse sample probability '{text}'")
    try:
        base = float(match.group("p"))
        band = None
        if match.group("q") is not None:
            band = (float(match.group("lo")), float(match.group("hi")),
                    float(match.group("q")))
    except ValueError as exc:
        raise BadProbability(f"bad number in '{text}'") from exc
    for value in (base,) + ((band[2],) if band else ()):
        if not 0.0 <= value <= 1.0:
            raise BadProbability(f"probability {value} in '{text}' not in "
                                 f"[0, 1]")
    if band is not None and band[0] > band[1]:
        raise BadProbability(f"empty income band in '{text}'")
    return SampleProbability(match.group("label") or "household", base, band)


def sample_state_of_charge(mean, rng, size=None):
    """Uniform on [max(0, 2 mean - 1), 1], which has the given mean"""
    return rng.uniform(max(0.0, 2.0 * mean - 1.0), 1.0, size)


def _type_weights(vehicle_types, label, categories):
    eligible = sorted((t for t in vehicle_types.values()
                       if t.category in categories), key=lambda t: t.id)
    if not eligible:
        raise BadProbability(f"no vehicle type can be sampled for {label}")
    parsed = []
    for vehicle_type in eligible:
        text = vehicle_type.sample_probability_string
        probability = parse_sample_probability(text) if text else None
        if probability is not None and probability.label == label:
            parsed.append((vehicle_type, probability))
    if not parsed:
        share = 1.0 / len(eligible)
        return [(t, SampleProbability(label, share)) for t in eligible]
    return parsed


def sample_vehicle_types(incomes, vehicle_types, rng, label="household",
                         categories=HOUSEHOLD_CAR_CATEGORIES):
    """
    Draw one vehicle type per income

    Args:
        incomes (iterable of float): owner incomes, dollars per year
        vehicle_types (dict): id -> VehicleType
        rng (numpy.random.Generator): random stream
        label (str): which probability strings apply
        categories (frozenset): vehicle categories that may be drawn

    Returns:
        list of VehicleType
    """
    weighted = _type_weights(vehicle_types, label, categories)
    chosen = []
    for income in incomes:
        weights = np.array([p.weight(income) for _, p in weighted])
        total = weights.sum()
        if abs(total - 1.0) > 1e-6:
            raise BadProbability(
                    f"{label} sample probabilities sum to {total:g} for "
                    f"income {income:g}")
        chosen.append(weighted[int(rng.choice(len(weighted),
                                              p=weights / total))][0])
    return chosen


def assign_vehicle_types(households, vehicle_types, rng, mean_soc=1.0):
    """
    Give every household its cars and bikes

    Cars take types drawn from the household sample probability strings
    (uniform when none is given); bikes take the first bike type.

    Args:
        households (iterable of Household): with num_vehicles and num_bikes
        vehicle_types (dict): id -> VehicleType
        rng (numpy.random.Generator): random stream
        mean_soc (float): mean starting state of charge

    Returns:
        list of Vehicle
    """
    households = sorted(households, key=lambda h: h.id)
    incomes = [h.income for h in households for _ in range(h.num_vehicles)]
    types = iter(sample_vehicle_types(incomes, vehicle_types, rng)
                 if incomes else [])
    bike_types = sorted(t.id for t in vehicle_types.values()
                        if t.category is VehicleCategory.BIKE)
    vehicles = []
    for household in households:
        for index in range(household.num_vehicles):
            vehicle_type = next(types)
            soc = float(sample_state_of_charge(mean_soc, rng)) \
                if vehicle_type.electric else 1.0
            vehicles.append(Vehicle(f"{household.id}-car{index}",
                                    vehicle_type.id, household.id, soc))
        if household.num_bikes and not bike_types:
            LOG.warning("household %s owns bikes but no bike type exists",
                        household.id)
            continue
        for index in range(household.num_bikes):
            vehicles.append(Vehicle(f"{household.id}-bike{index}",
                                    bike_types[0], household.id))
    return vehicles


def demand_weights(persons):
    """Home and work activity counts per TAZ"""
    weights = {}
    for person in persons.values():
        for activity in person.plan.activities:
            if activity.type in ("home", "work"):
                weights[activity.taz] = weights.get(activity.taz, 0) + 1
    return weights


def init_ondemand_fleet(spec, taz_demand_weights, rng, household_vehicles,
                        taz_centroids, vehicle_types):
    """
    Place the vehicles of a ride-hail fleet

    Args:
        spec (OnDemandFleetSpec): the fleet
        taz_demand_weights (dict): TAZ id -> home plus work activity count
        rng (numpy.random.Generator): random stream
        household_vehicles (int): household vehicles in the scenario
        taz_centroids (dict): TAZ id -> Point
        vehicle_types (dict): id -> VehicleType

    Returns:
        list of OnDemandVehicle
    """
    if not spec.procedural:
        return [dataclasses.replace(v, fleet_id=spec.id)
                for v in spec.explicit]
    size = int(math.floor(spec.ratio * household_vehicles + 0.5))
    zones = sorted(z for z, w in taz_demand_weights.items()
                   if w > 0 and z in taz_centroids)
    if size and not zones:
        LOG.warning("fleet %s has no zone with demand to start in", spec.id)
        return []
    weights = np.array([taz_demand_weights[z] for z in zones], dtype=float)
    placed = rng.choice(len(zones), size=size, p=weights / weights.sum()) \
        if size else []
    if spec.vehicle_type_id is not None:
        types = [vehicle_types[spec.vehicle_type_id]] * size
    else:
        types = sample_vehicle_types([0.0] * size, vehicle_types, rng,
                                     label="ridehail",
                                     categories=frozenset(VehicleCategory)
                                     - {VehicleCategory.BODY,
                                        VehicleCategory.BIKE})
    return [OnDemandVehicle(id=f"rideHail-{spec.id}-{i}",
                            type_id=types[i].id,
                            location=taz_centroids[zones[int(z)]],
                            geofence=spec.geofence,
                            shift=spec.shift,
                            fleet_id=spec.id)
            for i, z in enumerate(placed)]


def _fleet_rows(directory):
    frame = _read(directory, "ridehail_fleet.csv",
                  ["vehicle_id", "vehicle_type_id", "x", "y"],
                  ids=["fleet_id", "vehicle_id", "vehicle_type_id"],
                  required=False)
    rows = {}
    if frame is None:
        return rows
    for row in frame.to_dict("records"):
        geofence = None
        if not pd.isna(row.get("geofence_radius", float("nan"))):
            geofence = Geofence(Point(float(row["geofence_x"]),
                                      float(row["geofence_y"])),
                                float(row["geofence_radius"]))
        shift = None
        if not pd.isna(row.get("shift_start_s", float("nan"))):
            shift = (float(row["shift_start_s"]), float(row["shift_end_s"]))
        soc = row.get("state_of_charge", 1.0)
        fleet_id = _text(row.get("fleet_id")) or "default"
        rows.setdefault(fleet_id, []).append(OnDemandVehicle(
                id=row["vehicle_id"],
                type_id=row["vehicle_type_id"],
                location=Point(float(row["x"]), float(row["y"])),
                state_of_charge=1.0 if pd.isna(soc) else float(soc),
                geofence=geofence,
                shift=shift,
                fleet_id=fleet_id))
    return rows


def _fleet_specs(config, directory):
    rows = _fleet_rows(directory)
    specs = []
    for entry in config["agents.rideHail.fleets"] or []:
        fleet_id = str(entry.get("id", "default"))
        geofence = entry.get("geofence")
        shift = entry.get("shift")
        specs.append(OnDemandFleetSpec(
                id=fleet_id,
                ratio=entry.get("ratio"),
                explicit=tuple(rows.get(fleet_id, ())),
                vehicle_type_id=entry.get("vehicleTypeId"),
                shift=tuple(float(s) for s in shift) if shift else None,
                geofence=Geofence(Point(float(geofence["x"]),
                                        float(geofence["y"])),
                                  float(geofence["radius"]))
                if geofence else None,
                repositioning=entry.get("repositioning")))
    return specs


def _shared_specs(config, directory):
    specs = []
    for entry in config["agents.sharing.fleets"] or []:
        docks = ()
        if entry.get("docks"):
            frame = _read(directory, entry["docks"],
                          ["dock_id", "x", "y", "capacity"], ids=["dock_id"])
            docks = tuple(Dock(row.dock_id, Point(float(row.x), float(row.y)),
                               int(row.capacity))
                          for row in frame.itertuples(index=False))
        specs.append(SharedFleetSpec(
                id=str(entry["id"]),
                vehicle_type_id=str(entry["vehicleTypeId"]),
                mode=modes.Mode.parse(entry.get("mode", "SHARED_BIKE")),
                strategy=entry.get("strategy", "fixed-non-reserving"),
                size=int(entry.get("size", 0)),
                taz_counts={str(k): int(v) for k, v in
                            (entry.get("tazCounts") or {}).items()},
                docks=docks,
                search_radius=float(entry.get("searchRadiusMeters", 500.0)),
                round_trip=bool(entry.get("roundTrip", False)),
                price_per_minute=float(entry.get("pricePerMinute", 0.0))))
    return specs


def load_parking(directory):
    frame = _read(directory, "parking.csv",
                  ["zone", "parking_type", "pricing_model", "fee_usd",
                   "number_of_stalls"], ids=["zone"], required=False)
    if frame is None:
        return ()
    stalls = []
    for row in frame.to_dict("records"):
        power = row.get("charging_power_kw")
        x, y = row.get("x"), row.get("y")
        stalls.append(ParkingStallDescriptor(
                zone=row["zone"],
                parking_type=str(row["parking_type"]).strip().lower(),
                pricing=str(row["pricing_model"]).strip().lower(),
                cost=float(row["fee_usd"]),
                count=int(row["number_of_stalls"]),
                charger_power=None if power is None or pd.isna(power)
                else float(power),
                location=None if x is None or pd.isna(x)
                else Point(float(x), float(y)),
                manager=parse_manager(row.get("manager")),
                restriction=parse_time_restriction(
                    row.get("time_restriction"))))
    return tuple(stalls)


def load_scenario(directory, config, rng=None):
    """
    Read, cross-reference and check every input table

    Args:
        directory (str): scenario input directory
        config (config.Config): run configuration
        rng (numpy.random.Generator): stream for sampled vehicles and fleet
            placement

    Returns:
        Scenario: the scenario
    """
    if rng is None:
        rng = np.random.default_rng(int(config["seed"]))
    vehicle_types = load_vehicle_types(directory)
    households_frame = _read(directory, "households.csv",
                             ["id", "income", "home_taz", "x", "y"],
                             ids=["id", "home_taz"])
    persons_frame = _read(directory, "persons.csv",
                          ["id", "household_id", "age"],
                          ids=["id", "household_id"])
    net = load_network(directory)

    num_vehicles = _numbers(households_frame, "households.csv",
                            "num_vehicles", default=1.0)
    num_bikes = _numbers(households_frame, "households.csv", "num_bikes",
                         default=0.0)
    members = {}
    for row in persons_frame.itertuples(index=False):
        members.setdefault(row.household_id, []).append(row.id)
    households = {}
    for i, row in enumerate(households_frame.itertuples(index=False)):
        if row.home_taz not in net.tazs:
            raise DanglingReference(
                    f"household {row.id} lives in unknown TAZ {row.home_taz}")
        households[row.id] = Household(
                id=row.id,
                income=float(row.income),
                home_taz=row.home_taz,
                home=Point(float(row.x), float(row.y)),
                member_ids=tuple(sorted(members.get(row.id, ()))),
                num_vehicles=int(num_vehicles.iloc[i]),
                num_bikes=int(num_bikes.iloc[i]))
    unknown = sorted(set(members) - set(households))
    if unknown:
        raise DanglingReference(f"persons.csv references unknown household "
                                f"{unknown[0]}")

    vot = _numbers(persons_frame, "persons.csv", "value_of_time",
                   default=float("nan"))
    person_rows = {row.id: (row, vot.iloc[i]) for i, row in
                   enumerate(persons_frame.itertuples(index=False))}
    plans = load_plans(directory, person_rows, net)
    persons = {}
    for person_id, (row, value) in person_rows.items():
        if person_id not in plans:
            raise DanglingReference(f"person {person_id} has no plan")
        persons[person_id] = Person(
                id=person_id,
                household_id=row.household_id,
                age=int(row.age),
                value_of_time=None if math.isnan(value) else float(value),
                plan=plans[person_id])

    vehicles_frame = _read(directory, "vehicles.csv",
                           ["vehicle_id", "vehicle_type_id"],
                           ids=["vehicle_id", "vehicle_type_id",
                                "household_id"], required=False)
    if vehicles_frame is not None:
        vehicles = {}
        for row in vehicles_frame.to_dict("records"):
            if row["vehicle_type_id"] not in vehicle_types:
                raise DanglingReference(
                        f"vehicle {row['vehicle_id']} has unknown type "
                        f"{row['vehicle_type_id']}")
            household_id = _text(row.get("household_id"))
            if household_id is not None and household_id not in households:
                raise DanglingReference(
                        f"vehicle {row['vehicle_id']} belongs to unknown "
                        f"household {household_id}")
            soc = row.get("state_of_charge")
            vehicles[row["vehicle_id"]] = Vehicle(
                    row["vehicle_id"], row["vehicle_type_id"], household_id,
                    1.0 if soc is None or pd.isna(soc) else float(soc))
    else:
        mean = float(config[
            "agents.householdVehicles.meanPrivateVehicleStartingSOC"])
        vehicles = {v.id: v for v in assign_vehicle_types(
                households.values(), vehicle_types, rng, mean)}
    owned = {}
    for vehicle in vehicles.values():
        if vehicle.household_id is not None:
            owned.setdefault(vehicle.household_id, []).append(vehicle.id)
    households = {hid: dataclasses.replace(
                      h, vehicle_ids=tuple(sorted(owned.get(hid, ()))))
                  for hid, h in households.items()}

    timetable, tables = None, None
    transit_dir = os.path.join(directory, "transit")
    if os.path.isdir(transit_dir):
        tables = {
            "routes": _read(transit_dir, "routes.csv", ["route_id", "type"],
                            ids=["route_id"]),
            "trips": _read(transit_dir, "trips.csv",
                           ["trip_id", "route_id", "vehicle_type_id"],
                           ids=["trip_id", "route_id", "vehicle_type_id"]),
            "stop_times": _read(transit_dir, "stop_times.csv",
                                ["trip_id", "stop_seq", "stop_id", "x", "y",
                                 "arrival_s", "departure_s", "fare_usd"],
                                ids=["trip_id", "stop_id"]),
        }
        for row in tables["trips"].itertuples(index=False):
            if row.vehicle_type_id not in vehicle_types:
                raise DanglingReference(
                        f"transit trip {row.trip_id} has unknown vehicle type "
                        f"{row.vehicle_type_id}")
        timetable = transit.Timetable.from_frames(
                tables["routes"], tables["trips"], tables["stop_times"],
                float(config["transit.transferRadiusMeters"]),
                float(config["agents.walkSpeed"]))

    scenario = Scenario(
            households=households,
            persons=persons,
            vehicle_types=vehicle_types,
            vehicles=vehicles,
            network=net,
            timetable=timetable,
            parking=load_parking(directory),
            shared_fleets=tuple(_shared_specs(config, directory)),
            activity_intercepts=_read(directory, "activity_intercepts.csv",
                                      ["activity_type"] +
                                      [f"hour_{h}" for h in range(24)],
                                      required=False),
            activity_params=_read(directory, "activity_params.csv",
                                  ["activity_type", "mean_duration_s",
                                   "value_of_time_usd_per_hr"],
                                  required=False),
            transit_tables=tables)

    fleets = _fleet_specs(config, directory)
    weights = demand_weights(persons)
    centroids = net.taz_centroids
    fleet_vehicles = []
    for spec in fleets:
        placed = init_ondemand_fleet(spec, weights, rng,
                                     scenario.household_vehicle_count,
                                     centroids, vehicle_types)
        for vehicle in placed:
            if vehicle.type_id not in vehicle_types:
                raise DanglingReference(
                        f"ride-hail vehicle {vehicle.id} has unknown type "
                        f"{vehicle.type_id}")
        fleet_vehicles.extend(placed)
    for spec in scenario.shared_fleets:
        if spec.vehicle_type_id not in vehicle_types:
            raise DanglingReference(
                    f"shared fleet {spec.id} has unknown type "
                    f"{spec.vehicle_type_id}")
    scenario = dataclasses.replace(scenario, ridehail_fleets=tuple(fleets),
                                   ridehail_vehicles=tuple(fleet_vehicles))
    LOG.info("loaded %d households, %d persons, %d vehicles, %d links",
             len(households), len(persons), len(vehicles),
             len(net.links))
    return scenario


@dataclasses.dataclass(frozen=True)
class ValidationIssue:
    subject: str
    message: str

    def __str__(self):
        return f"{self.subject}: {self.message}"


def validate_scenario(scenario):
    """
    Find what would keep a scenario from running properly

    Returns:
        list of ValidationIssue: empty when the scenario is runnable
    """
    issues = []
    for vehicle in scenario.vehicles.values():
        if vehicle.type_id not in scenario.vehicle_types:
            issues.append(ValidationIssue(
                    f"vehicle {vehicle.id}",
                    f"unknown vehicle type {vehicle.type_id}"))

    net = scenario.network
    walk_graph = nx.DiGraph()
    walk_graph.add_edges_from((l.from_node, l.to_node)
                              for l in net.links.values() if "walk" in l.modes)
    component = max(nx.strongly_connected_components(walk_graph), key=len,
                    default=set())
    for person in sorted(scenario.persons.values(), key=lambda p: p.id):
        previous = None
        for activity in person.plan.activities:
            try:
                node, _ = net.nearest_node(activity.location, "walk")
            except network.Unreachable:
                node = None
            if node not in component:
                issues.append(ValidationIssue(
                        f"person {person.id}",
                        f"{activity.type} activity at "
                        f"({activity.location.x:g}, {activity.location.y:g}) "
                        f"is not reachable on the walk network"))
            if previous is not None and activity.end_time is not None \
                    and activity.end_time <= previous:
                issues.append(ValidationIssue(
                        f"person {person.id}",
                        f"{activity.type} activity has zero duration"))
            if activity.end_time is not None:
                previous = activity.end_time
    return issues


def _plan_rows(person):
    rows = []
    for index, element in enumerate(person.plan.elements):
        if isinstance(element, Activity):
            rows.append({"person_id": person.id, "elem_index": index,
                         "elem_type": "activity",
                         "activity_type": element.type,
                         "x": element.location.x, "y": element.location.y,
                         "taz": element.taz, "end_time": element.end_time,
                         "mode": None, "tour_id": element.tour_id,
                         "route": None})
        else:
            rows.append({"person_id": person.id, "elem_index": index,
                         "elem_type": "leg", "activity_type": None,
                         "x": None, "y": None, "taz": None, "end_time": None,
                         "mode": element.mode.value if element.mode else None,
                         "tour_id": element.tour_id,
                         "route": "|".join(element.route) or None})
    return rows


def write_scenario(scenario, directory):
    """Write every table of a scenario back to CSV files"""
    os.makedirs(directory, exist_ok=True)

    def write(frame, name):
        frame.to_csv(os.path.join(directory, name), index=False)

    net = scenario.network
    write(pd.DataFrame(
            [{"id": h.id, "income": h.income, "home_taz": h.home_taz,
              "x": h.home.x, "y": h.home.y, "num_vehicles": h.num_vehicles,
              "num_bikes": h.num_bikes}
             for h in sorted(scenario.households.values(), key=lambda h: h.id)],
            columns=["id", "income", "home_taz", "x", "y", "num_vehicles",
                     "num_bikes"]), "households.csv")
    persons = sorted(scenario.persons.values(), key=lambda p: p.id)
    write(pd.DataFrame(
            [{"id": p.id, "household_id": p.household_id, "age": p.age,
              "value_of_time": p.value_of_time} for p in persons],
            columns=["id", "household_id", "age", "value_of_time"]),
          "persons.csv")
    write(pd.DataFrame([row for p in persons for row in _plan_rows(p)],
                       columns=["person_id", "elem_index", "elem_type",
                                "activity_type", "x", "y", "taz", "end_time",
                                "mode", "tour_id", "route"]), "plans.csv")
    write(pd.DataFrame(
            [{"vehicle_type_id": t.id,
              "seating_capacity": t.seating_capacity,
              "standing_capacity": t.standing_capacity,
              "length_m": t.length,
              "primary_fuel": t.primary_fuel.value,
              "primary_consumption_j_per_m": t.primary_consumption,
              "primary_capacity_j": t.primary_capacity,
              "secondary_fuel": t.secondary_fuel.value
              if t.secondary_fuel else None,
              "secondary_consumption_j_per_m": t.secondary_consumption,
              "secondary_capacity_j": t.secondary_capacity,
              "automation_level": t.automation_level,
              "category": t.category.value,
              "charging_power_kw": t.charging_power,
              "sample_probability_string": t.sample_probability_string}
             for t in sorted(scenario.vehicle_types.values(),
                             key=lambda t: t.id) if t.id != BODY_TYPE.id]),
          "vehicletypes.csv")
    write(pd.DataFrame(
            [{"vehicle_id": v.id, "vehicle_type_id": v.type_id,
              "household_id": v.household_id,
              "state_of_charge": v.state_of_charge}
             for v in sorted(scenario.vehicles.values(), key=lambda v: v.id)],
            columns=["vehicle_id", "vehicle_type_id", "household_id",
                     "state_of_charge"]), "vehicles.csv")
    write(pd.DataFrame([{"node_id": n, "x": p.x, "y": p.y}
                        for n, p in sorted(net.nodes.items())],
                       columns=["node_id", "x", "y"]), "nodes.csv")
    write(pd.DataFrame([{"taz_id": z, "x": t.centroid.x, "y": t.centroid.y}
                        for z, t in sorted(net.tazs.items())],
                       columns=["taz_id", "x", "y"]), "tazs.csv")
    write(pd.DataFrame(
            [{"link_id": l.id, "from_node": l.from_node, "to_node": l.to_node,
              "length_m": l.length, "free_speed_mps": l.free_speed,
              "capacity_vph": l.capacity, "lanes": l.lanes,
              "modes": "|".join(sorted(l.modes)), "grade_pct": l.grade,
              "toll_usd": l.toll} for l in net.links.values()]),
          "network.csv")
    if scenario.parking:
        write(pd.DataFrame(
                [{"zone": s.zone, "parking_type": s.parking_type,
                  "pricing_model": s.pricing, "fee_usd": s.cost,
                  "charging_power_kw": s.charger_power,
                  "x": s.location.x if s.location else None,
                  "y": s.location.y if s.location else None,
                  "manager": f"{s.manager[0]}({s.manager[1]})",
                  "time_restriction": _format_restriction(s.restriction),
                  "number_of_stalls": s.count} for s in scenario.parking]),
              "parking.csv")
    explicit = [v for spec in scenario.ridehail_fleets
                if not spec.procedural for v in spec.explicit]
    if explicit:
        write(pd.DataFrame(
                [{"fleet_id": v.fleet_id, "vehicle_id": v.id,
                  "vehicle_type_id": v.type_id, "x": v.location.x,
                  "y": v.location.y, "state_of_charge": v.state_of_charge,
                  "geofence_x": v.geofence.center.x if v.geofence else None,
                  "geofence_y": v.geofence.center.y if v.geofence else None,
                  "geofence_radius": v.geofence.radius if v.geofence
                  else None,
                  "shift_start_s": v.shift[0] if v.shift else None,
                  "shift_end_s": v.shift[1] if v.shift else None}
                 for v in explicit]), "ridehail_fleet.csv")
    for name, frame in (("activity_intercepts.csv",
                         scenario.activity_intercepts),
                        ("activity_params.csv", scenario.activity_params)):
        if frame is not None:
            write(frame, name)
    if scenario.transit_tables:
        os.makedirs(os.path.join(directory, "transit"), exist_ok=True)
        for name, frame in scenario.transit_tables.items():
            write(frame, os.path.join("transit", f"{name}.csv"))


def _format_restriction(restriction):
    if restriction is None:
        return None

    def clock(seconds):
        return f"{int(seconds // 3600):02d}:{int(seconds % 3600 // 60):02d}"
    return (f"{restriction.category.value}|{clock(restriction.start)}-"
            f"{clock(restriction.end)}")
