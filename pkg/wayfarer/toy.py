"""A small synthetic scenario for trying the simulator and testing it"""
import logging
import os

import numpy as np
import pandas as pd
import yaml

from . import streams

LOG = logging.getLogger(__name__)

SPACING = 500.0
ZONE_BLOCK = 2
FREE_SPEED = 11.0
BUS_SPEED = 8.0
BUS_HEADWAY = 600.0
BUS_DWELL = 20.0
BUS_FARE = 2.0
RIDE_HAIL_VEHICLES = 20
SHARED_BIKES_PER_ZONE = 4
# the toy population samples a city about thirty times larger
FLOW_CAPACITY_FACTOR = 0.03
STORAGE_CAPACITY_FACTOR = 0.3

DISCRETIONARY = ("shopping", "eatout", "social")

# activity type: mean duration in seconds, dollars per hour spent there
ACTIVITIES = {
    "home": (43200.0, 6.0),
    "work": (30600.0, 10.0),
    "school": (25200.0, 8.0),
    "shopping": (2700.0, 9.0),
    "eatout": (3600.0, 11.0),
    "social": (5400.0, 9.0),
}

VEHICLE_TYPES = [
    {"vehicle_type_id": "CAR", "seating_capacity": 4, "length_m": 4.5,
     "primary_fuel": "Gasoline", "primary_consumption_j_per_m": 2700.0,
     "primary_capacity_j": 1.7e9, "automation_level": 1, "category": "Car"},
    {"vehicle_type_id": "BEV", "seating_capacity": 4, "length_m": 4.5,
     "primary_fuel": "Electricity", "primary_consumption_j_per_m": 600.0,
     "primary_capacity_j": 2.16e8, "automation_level": 1, "category": "Car",
     "charging_power_kw": 7.2},
    {"vehicle_type_id": "BIKE", "seating_capacity": 1, "length_m": 1.8,
     "primary_fuel": "Food", "primary_consumption_j_per_m": 40.0,
     "primary_capacity_j": 1.0e9, "automation_level": 1, "category": "Bike"},
    {"vehicle_type_id": "SHARED-BIKE", "seating_capacity": 1,
     "length_m": 1.8, "primary_fuel": "Food",
     "primary_consumption_j_per_m": 40.0, "primary_capacity_j": 1.0e9,
     "automation_level": 1, "category": "Bike"},
    {"vehicle_type_id": "RH-CAR", "seating_capacity": 4, "length_m": 4.5,
     "primary_fuel": "Gasoline", "primary_consumption_j_per_m": 2700.0,
     "primary_capacity_j": 1.7e9, "automation_level": 1, "category": "Car"},
    {"vehicle_type_id": "BUS", "seating_capacity": 30, "standing_capacity": 20,
     "length_m": 12.0, "primary_fuel": "Diesel",
     "primary_consumption_j_per_m": 20000.0, "primary_capacity_j": 1.0e10,
     "automation_level": 1, "category": "MediumDutyPassenger"},
]


def _node(i, j):
    return f"{i}_{j}"


def _grid(size):
    nodes = [{"node_id": _node(i, j), "x": j * SPACING, "y": i * SPACING}
             for i in range(size) for j in range(size)]
    links = []
    middle = size // 2
    for i in range(size):
        for j in range(size):
            for di, dj in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                a, b = i + di, j + dj
                if not (0 <= a < size and 0 <= b < size):
                    continue
                arterial = i == a == middle or j == b == middle
                links.append({
                    "link_id": f"{_node(i, j)}-{_node(a, b)}",
                    "from_node": _node(i, j), "to_node": _node(a, b),
                    "length_m": SPACING, "free_speed_mps": FREE_SPEED,
                    "capacity_vph": 1200.0 if arterial else 600.0,
                    "lanes": 2 if arterial else 1,
                    "modes": "car|walk|bike"})
    return pd.DataFrame(nodes), pd.DataFrame(links)


def _zones(size):
    blocks = max(1, size // ZONE_BLOCK)
    offset = (ZONE_BLOCK - 1) * SPACING / 2.0
    return pd.DataFrame(
            [{"taz_id": str(r * blocks + c + 1),
              "x": c * ZONE_BLOCK * SPACING + offset,
              "y": r * ZONE_BLOCK * SPACING + offset}
             for r in range(blocks) for c in range(blocks)])


def _nearest_zone(zones, x, y):
    d2 = (zones["x"] - x) ** 2 + (zones["y"] - y) ** 2
    return str(zones["taz_id"].iloc[int(np.argmin(d2.to_numpy()))])


def _spot(rng, size, center_bias=0.0):
    """A point on the grid, drawn toward the center as the bias grows"""
    extent = (size - 1) * SPACING
    if rng.random() < center_bias:
        x, y = rng.normal(extent / 2, extent / 6, size=2)
    else:
        x, y = rng.uniform(0, extent, size=2)
    return float(np.clip(x, 0, extent)), float(np.clip(y, 0, extent))


def _household_sizes(rng, persons):
    sizes = []
    while sum(sizes) < persons:
        sizes.append(int(rng.choice([1, 2, 3, 4], p=[0.2, 0.35, 0.25, 0.2])))
    sizes[-1] -= sum(sizes) - persons
    return [s for s in sizes if s > 0]


def _plan(rng, person_id, age, home, zones, size):
    """Plan rows of one person: a commute, an errand or a day at home"""
    rows = []

    def activity(kind, x, y, end):
        rows.append({"person_id": person_id, "elem_index": len(rows),
                     "elem_type": "activity", "activity_type": kind,
                     "x": x, "y": y, "taz": _nearest_zone(zones, x, y),
                     "end_time": end, "mode": None})

    def leg():
        rows.append({"person_id": person_id, "elem_index": len(rows),
                     "elem_type": "leg", "activity_type": None, "x": None,
                     "y": None, "taz": None, "end_time": None, "mode": None})

    hx, hy = home
    draw = rng.random()
    if age < 18:
        leave = round(rng.uniform(7.0, 8.0) * 3600.0)
        sx, sy = _spot(rng, size)
        activity("home", hx, hy, leave)
        leg()
        activity("school", sx, sy, leave + round(rng.uniform(6.5, 7.5) * 3600))
        leg()
    elif age < 65 and draw < 0.7:
        leave = round(rng.uniform(6.5, 9.0) * 3600.0)
        wx, wy = _spot(rng, size, center_bias=0.7)
        off = leave + round(rng.uniform(8.0, 9.5) * 3600)
        activity("home", hx, hy, leave)
        leg()
        activity("work", wx, wy, off)
        leg()
        if rng.random() < 0.3:
            shop = _spot(rng, size)
            activity("shopping", shop[0], shop[1],
                     off + round(rng.uniform(0.5, 1.5) * 3600))
            leg()
    elif draw < 0.95:
        leave = round(rng.uniform(9.0, 15.0) * 3600.0)
        kind = str(rng.choice(DISCRETIONARY))
        dx, dy = _spot(rng, size)
        activity("home", hx, hy, leave)
        leg()
        activity(kind, dx, dy, leave + round(rng.uniform(0.75, 2.5) * 3600))
        leg()
    activity("home", hx, hy, None)
    return rows


def _intercepts():
    hours = np.arange(24)
    shapes = {
        "shopping": np.exp(-0.5 * ((hours - 13.0) / 3.5) ** 2),
        "eatout": np.exp(-0.5 * ((hours - 12.5) / 1.0) ** 2)
        + np.exp(-0.5 * ((hours - 19.0) / 1.5) ** 2),
        "social": np.exp(-0.5 * ((hours - 18.0) / 2.5) ** 2),
    }
    rows = []
    for kind, weights in shapes.items():
        weights = np.where((hours < 6) | (hours > 22), 0.0, weights)
        row = {"activity_type": kind}
        row.update({f"hour_{h}": round(float(w), 4)
                    for h, w in zip(hours, weights)})
        rows.append(row)
    return pd.DataFrame(rows)


def _bus_line(size):
    """One bus route along the middle row, both directions"""
    row = size // 2
    stops = [(f"s{j}", j * SPACING, row * SPACING) for j in range(size)]
    hop = SPACING / BUS_SPEED
    trips, stop_times = [], []
    for direction, sequence in (("east", stops), ("west", stops[::-1])):
        start = 6 * 3600.0
        number = 0
        while start <= 22 * 3600.0:
            trip_id = f"bus-{direction}-{number}"
            trips.append({"trip_id": trip_id, "route_id": "bus-1",
                          "vehicle_type_id": "BUS"})
            t = start
            for seq, (stop_id, x, y) in enumerate(sequence):
                stop_times.append({
                    "trip_id": trip_id, "stop_seq": seq, "stop_id": stop_id,
                    "x": x, "y": y, "arrival_s": t,
                    "departure_s": t + BUS_DWELL, "fare_usd": BUS_FARE})
                t += BUS_DWELL + hop
            start += BUS_HEADWAY
            number += 1
    routes = pd.DataFrame([{"route_id": "bus-1", "type": "bus"}])
    return routes, pd.DataFrame(trips), pd.DataFrame(stop_times)


def _parking(zones, size):
    center = (size - 1) * SPACING / 2.0
    rows = []
    for zone in zones.itertuples(index=False):
        central = abs(zone.x - center) <= SPACING * 1.5 and \
            abs(zone.y - center) <= SPACING * 1.5
        rows += [
            {"zone": zone.taz_id, "parking_type": "residential",
             "pricing_model": "fixed", "fee_usd": 0.0,
             "number_of_stalls": 400, "charging_power_kw": None,
             "manager": "TAZ(default)"},
            {"zone": zone.taz_id, "parking_type": "workplace",
             "pricing_model": "fixed", "fee_usd": 0.0,
             "number_of_stalls": 60 if central else 20,
             "charging_power_kw": None, "manager": "TAZ(default)"},
            {"zone": zone.taz_id, "parking_type": "public",
             "pricing_model": "hourly", "fee_usd": 2.0 if central else 0.5,
             "number_of_stalls": 40 if central else 60,
             "charging_power_kw": None, "manager": "TAZ(default)"},
        ]
        if central:
            rows.append({"zone": zone.taz_id, "parking_type": "public",
                         "pricing_model": "hourly", "fee_usd": 1.0,
                         "number_of_stalls": 4, "charging_power_kw": 50.0,
                         "manager": "TAZ(default)"})
    return pd.DataFrame(rows)


def _config(zones):
    return {
        "seed": 42,
        "inputDirectory": ".",
        "outputDirectory": "output",
        "simulation": {"lastIteration": 9},
        "physsim": {"flowCapacityFactor": FLOW_CAPACITY_FACTOR,
                    "storageCapacityFactor": STORAGE_CAPACITY_FACTOR},
        "modeChoice": {
            "asc": {"CAR": 0.0, "WALK": 0.0, "BIKE": -1.0,
                    "WALK_TRANSIT": -0.5, "RIDE_HAIL": -1.0,
                    "RIDE_HAIL_POOLED": -1.5, "SHARED_BIKE": -1.5},
        },
        "agents": {
            "rideHail": {"fleets": [{"id": "default"}]},
            "sharing": {"fleets": [{
                "id": "bikeshare",
                "vehicleTypeId": "SHARED-BIKE",
                "mode": "SHARED_BIKE",
                "strategy": "fixed-non-reserving-fleet-by-TAZ",
                "tazCounts": {str(z): SHARED_BIKES_PER_ZONE
                              for z in zones["taz_id"]},
                "searchRadiusMeters": 500.0,
                "pricePerMinute": 0.1,
            }]},
        },
        "outputs": {"writeEvents": True, "modeChoiceSvg": False},
    }


def make_toy(directory, size=10, persons=1000, seed=42):
    """
    Write a grid scenario with a population, a bus line and fleets

    The grid has size x size nodes 500 m apart, one TAZ per 2 x 2 block of
    nodes, a bus line along the middle row, 20 ride-hail vehicles, a shared
    bike fleet and parking in every zone. Its config scales link capacities
    down as for a sampled population, so the commute peak queues.

    Args:
        directory (str): where the scenario and its config.yaml go
        size (int): nodes per side
        persons (int): population size
        seed (int): generator seed

    Returns:
        str: path of the written config.yaml
    """
    if size < 2:
        raise ValueError("the grid needs at least 2 nodes per side")
    rng = streams.stream(seed, "toy")
    os.makedirs(os.path.join(directory, "transit"), exist_ok=True)

    def write(frame, name):
        frame.to_csv(os.path.join(directory, name), index=False)

    nodes, links = _grid(size)
    zones = _zones(size)
    write(nodes, "nodes.csv")
    write(links, "network.csv")
    write(zones, "tazs.csv")
    write(pd.DataFrame(VEHICLE_TYPES), "vehicletypes.csv")

    households, people, plans, vehicles = [], [], [], []
    person_index = 0
    for h, members in enumerate(_household_sizes(rng, persons)):
        household_id = f"h{h}"
        home = _spot(rng, size)
        home_taz = _nearest_zone(zones, *home)
        cars = int(rng.choice([0, 1, 2], p=[0.15, 0.55, 0.3]))
        bikes = int(rng.random() < 0.4)
        households.append({
            "id": household_id,
            "income": round(float(rng.lognormal(11.0, 0.5)), 2),
            "home_taz": home_taz, "x": home[0], "y": home[1],
            "num_vehicles": cars, "num_bikes": bikes})
        for v in range(cars):
            vehicles.append({"vehicle_id": f"{household_id}-car{v}",
                             "vehicle_type_id": "BEV" if rng.random() < 0.1
                             else "CAR",
                             "household_id": household_id,
                             "state_of_charge": 1.0})
        for v in range(bikes):
            vehicles.append({"vehicle_id": f"{household_id}-bike{v}",
                             "vehicle_type_id": "BIKE",
                             "household_id": household_id,
                             "state_of_charge": 1.0})
        for m in range(members):
            person_id = f"p{person_index}"
            person_index += 1
            age = int(rng.integers(25, 60)) if m == 0 \
                else int(rng.integers(5, 80))
            people.append({
                "id": person_id, "household_id": household_id, "age": age,
                "value_of_time": round(float(rng.lognormal(2.6, 0.3)), 2)})
            plans += _plan(rng, person_id, age, home, zones, size)

    write(pd.DataFrame(households), "households.csv")
    write(pd.DataFrame(people), "persons.csv")
    write(pd.DataFrame(plans), "plans.csv")
    write(pd.DataFrame(vehicles), "vehicles.csv")
    write(_parking(zones, size), "parking.csv")

    fleet = []
    for v in range(RIDE_HAIL_VEHICLES):
        x, y = _spot(rng, size, center_bias=0.5)
        fleet.append({"fleet_id": "default", "vehicle_id": f"rh-{v}",
                      "vehicle_type_id": "RH-CAR", "x": x, "y": y,
                      "state_of_charge": 1.0})
    write(pd.DataFrame(fleet), "ridehail_fleet.csv")

    write(_intercepts(), "activity_intercepts.csv")
    write(pd.DataFrame([{"activity_type": k, "mean_duration_s": d,
                         "value_of_time_usd_per_hr": b}
                        for k, (d, b) in ACTIVITIES.items()]),
          "activity_params.csv")

    routes, trips, stop_times = _bus_line(size)
    write(routes, os.path.join("transit", "routes.csv"))
    write(trips, os.path.join("transit", "trips.csv"))
    write(stop_times, os.path.join("transit", "stop_times.csv"))

    path = os.path.join(directory, "config.yaml")
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(_config(zones), handle, sort_keys=True)
    LOG.info("wrote a %dx%d toy scenario with %d persons in %d households "
             "to %s", size, size, len(people), len(households), directory)
    return path
