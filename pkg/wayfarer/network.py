"""Street network, link travel times and time-dependent shortest paths"""
import dataclasses
import heapq
import itertools
import logging
import math
import typing

import networkx as nx
import numpy as np
import pandas as pd

from . import errors
from .geometry import Point

LOG = logging.getLogger(__name__)

NETWORK_MODES = ("car", "walk", "bike")


class Unreachable(errors.WayfarerError):
    """No path allowing the mode connects origin and destination"""


@dataclasses.dataclass(frozen=True)
class Link:
    """A directed network edge"""
    id: str
    from_node: str
    to_node: str
    length: float
    free_speed: float
    capacity: float
    lanes: float
    modes: typing.FrozenSet[str]
    grade: float = 0.0
    toll: float = 0.0

    def __post_init__(self):
        if self.length <= 0 or self.free_speed <= 0 or self.capacity <= 0:
            raise ValueError(
                    f"link {self.id} needs positive length, free speed and "
                    f"capacity")

    @property
    def free_flow_time(self):
        return self.length / self.free_speed


@dataclasses.dataclass(frozen=True)
class TAZ:
    """Traffic analysis zone"""
    id: str
    centroid: Point
    link_ids: typing.Tuple[str, ...] = ()


@dataclasses.dataclass(frozen=True)
class ModeSpeeds:
    """
    Speeds of the self-propelled modes

    * walk, bike: flat-ground speeds in m/s
    * grade_multipliers: (grade percent, speed multiplier) breakpoints,
      interpolated linearly and held constant outside the range
    """
    walk: float = 1.4
    bike: float = 4.5
    grade_multipliers: typing.Tuple[typing.Tuple[float, float], ...] = (
            (-6.0, 1.2), (0.0, 1.0), (6.0, 0.6))

    @classmethod
    def from_config(cls, config):
        return cls(
                walk=float(config["agents.walkSpeed"]),
                bike=float(config["agents.bikeSpeed"]),
                grade_multipliers=tuple(
                    (float(g), float(m))
                    for g, m in config["agents.gradeSpeedMultipliers"]))

    def speed(self, mode, grade=0.0):
        base = self.walk if mode == "walk" else self.bike
        grades, multipliers = zip(*self.grade_multipliers)
        return base * float(np.interp(grade, grades, multipliers))


class Network:
    """
    Link graph with node coordinates and TAZ membership

    Every link belongs to the TAZ whose centroid is nearest its midpoint.
    """

    def __init__(self, nodes, links, taz_centroids):
        """
        Initialiser

        Args:
            nodes (dict): node id -> Point
            links (iterable of Link): the links
            taz_centroids (dict): TAZ id -> Point
        """
        self.nodes = dict(nodes)
        self.links = {}
        self.graph = nx.MultiDiGraph()
        for node_id, point in self.nodes.items():
            self.graph.add_node(node_id, pos=point)
        for link in links:
            if link.id in self.links:
                raise ValueError(f"duplicate link id {link.id}")
            for node in (link.from_node, link.to_node):
                if node not in self.nodes:
                    raise KeyError(f"link {link.id} references node {node}")
            self.links[link.id] = link
            self.graph.add_edge(link.from_node, link.to_node, key=link.id,
                                link=link)
        self.link_index = {lid: i for i, lid in enumerate(self.links)}
        self._outgoing = {mode: {} for mode in NETWORK_MODES}
        for link in self.links.values():
            for mode in link.modes:
                self._outgoing.setdefault(mode, {}).setdefault(
                        link.from_node, []).append(link)

        self._taz_ids = list(taz_centroids)
        self._taz_xy = np.array([[p.x, p.y] for p in taz_centroids.values()],
                                dtype=float).reshape(-1, 2)
        members = {taz_id: [] for taz_id in self._taz_ids}
        self.link_taz = {}
        for link in self.links.values():
            midpoint = self.nodes[link.from_node].towards(
                    self.nodes[link.to_node], 0.5)
            taz_id = self.taz_of(midpoint)
            self.link_taz[link.id] = taz_id
            members[taz_id].append(link.id)
        self.tazs = {taz_id: TAZ(taz_id, taz_centroids[taz_id],
                                 tuple(members[taz_id]))
                     for taz_id in self._taz_ids}
        self.taz_centroids = {taz_id: taz.centroid
                              for taz_id, taz in self.tazs.items()}

        self._snap = {}
        for mode in NETWORK_MODES:
            ids = sorted({n for link in self.links.values()
                          if mode in link.modes
                          for n in (link.from_node, link.to_node)})
            xy = np.array([[self.nodes[n].x, self.nodes[n].y] for n in ids],
                          dtype=float).reshape(-1, 2)
            self._snap[mode] = (ids, xy)

    def outgoing(self, node, mode):
        return self._outgoing.get(mode, {}).get(node, ())

    def taz_of(self, point):
        """The id of the TAZ with the nearest centroid"""
        if not self._taz_ids:
            raise Unreachable("network has no TAZs")
        d2 = ((self._taz_xy - np.array([point.x, point.y])) ** 2).sum(axis=1)
        return self._taz_ids[int(np.argmin(d2))]

    def nearest_node(self, point, mode):
        """
        Snap a location to the network

        Args:
            point (Point): the location
            mode (str): network mode the node must serve

        Returns:
            tuple: node id and snap distance in meters
        """
        ids, xy = self._snap.get(mode, ((), None))
        if not ids:
            raise Unreachable(f"no link allows mode {mode}")
        d2 = ((xy - np.array([point.x, point.y])) ** 2).sum(axis=1)
        best = int(np.argmin(d2))
        return ids[best], math.sqrt(float(d2[best]))

    def path_length(self, link_ids):
        return sum(self.links[lid].length for lid in link_ids)


class LinkTravelTimeTable:
    """
    Congested link traversal times per fixed-length period of entry

    A vehicle entering a link at time t uses the time of t's period, raised
    where necessary so that t + travel_time(t) never decreases in t (FIFO).
    """

    def __init__(self, network, times, period_length=3600.0):
        """
        Initialiser

        Args:
            network (Network): the network the table covers
            times (numpy.ndarray): links x periods matrix of seconds, rows in
                network.link_index order
            period_length (float): seconds per period
        """
        self.network = network
        self.period_length = float(period_length)
        free = np.array([link.free_flow_time
                         for link in network.links.values()])
        times = np.asarray(times, dtype=float).reshape(len(free), -1)
        self.times = np.maximum(times, free[:, None])
        self.floors = np.full_like(self.times, -np.inf)
        for p in range(1, self.times.shape[1]):
            self.floors[:, p] = np.maximum(
                    self.floors[:, p - 1],
                    p * self.period_length + self.times[:, p - 1])

    @classmethod
    def free_flow(cls, network, period_length=3600.0, periods=30):
        free = np.array([link.free_flow_time
                         for link in network.links.values()])
        return cls(network, np.repeat(free[:, None], periods, axis=1),
                   period_length)

    @property
    def periods(self):
        return self.times.shape[1]

    def period_of(self, t):
        return min(max(int(t // self.period_length), 0), self.periods - 1)

    def travel_time(self, link_id, enter_time):
        i = self.network.link_index[link_id]
        p = self.period_of(enter_time)
        return max(self.times[i, p], self.floors[i, p] - enter_time)

    def to_frame(self):
        link_ids = list(self.network.links)
        rows = [(lid, p * self.period_length, self.times[i, p])
                for i, lid in enumerate(link_ids)
                for p in range(self.periods)]
        return pd.DataFrame(rows, columns=["link_id", "period_start_s",
                                           "travel_time_s"])


@dataclasses.dataclass(frozen=True)
class Route:
    """A link path with its timing"""
    links: typing.Tuple[str, ...]
    depart: float
    arrive: float
    distance: float
    toll: float = 0.0
    cost: float = 0.0

    @property
    def duration(self):
        return self.arrive - self.depart


def link_time(link, enter_time, mode, table, speeds):
    """Seconds to traverse a link entered at a given time by a mode"""
    if mode == "car":
        return table.travel_time(link.id, enter_time)
    return link.length / speeds.speed(mode, link.grade)


def shortest_path(network, origin, destination, depart_time, mode, table,
                  value_of_time=None, speeds=ModeSpeeds()):
    """
    Time-dependent least generalized cost path between two nodes

    Generalized cost is travel time plus tolls converted to seconds at the
    traveller's value of time. Each link uses the travel time of the period
    in which it is entered.

    Args:
        network (Network): the network
        origin (str): origin node id
        destination (str): destination node id
        depart_time (float): departure time in seconds from midnight
        mode (str): network mode ("car", "walk" or "bike")
        table (LinkTravelTimeTable): car link travel times
        value_of_time (float): dollars per hour, None to ignore tolls
        speeds (ModeSpeeds): walk and bike speeds

    Returns:
        Route: the chosen path
    """
    if origin == destination:
        return Route((), depart_time, depart_time, 0.0)
    toll_weight = 3600.0 / value_of_time if value_of_time else 0.0
    counter = itertools.count()
    best = {origin: 0.0}
    labels = {origin: (depart_time, None, None)}
    heap = [(0.0, next(counter), origin)]
    settled = set()
    while heap:
        cost, _, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == destination:
            break
        arrive = labels[node][0]
        for link in network.outgoing(node, mode):
            if link.to_node in settled:
                continue
            duration = link_time(link, arrive, mode, table, speeds)
            new_cost = cost + duration + link.toll * toll_weight
            if new_cost < best.get(link.to_node, math.inf):
                best[link.to_node] = new_cost
                labels[link.to_node] = (arrive + duration, node, link)
                heapq.heappush(heap, (new_cost, next(counter), link.to_node))
    if destination not in settled:
        raise Unreachable(
                f"no {mode} path from node {origin} to node {destination}")

    path = []
    node = destination
    while labels[node][1] is not None:
        _, previous, link = labels[node]
        path.append(link)
        node = previous
    path.reverse()
    return Route(
            links=tuple(link.id for link in path),
            depart=depart_time,
            arrive=labels[destination][0],
            distance=sum(link.length for link in path),
            toll=sum(link.toll for link in path),
            cost=best[destination])


def path_arrival(network, link_ids, depart_time, mode, table,
                 speeds=ModeSpeeds()):
    """Arrival time when following a fixed link path"""
    t = depart_time
    for link_id in link_ids:
        t += link_time(network.links[link_id], t, mode, table, speeds)
    return t


def update_link_times(table, linkstats, noise_sigma=0.0, rng=None):
    """
    Build the next iteration's travel time table from linkstats

    Args:
        table (LinkTravelTimeTable): the table used this iteration
        linkstats (pandas.DataFrame): link_id, period_start_s, travel_time_s
        noise_sigma (float): log-normal noise spread, 0 for none
        rng (numpy.random.Generator): noise source

    Returns:
        LinkTravelTimeTable: the replacement table
    """
    times = table.times.copy()
    index = table.network.link_index
    for link_id, start, travel_time in linkstats[
            ["link_id", "period_start_s", "travel_time_s"]].itertuples(
                index=False):
        if link_id not in index:
            continue
        p = table.period_of(start)
        times[index[link_id], p] = travel_time
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("noise requires a random stream")
        times = times * np.exp(noise_sigma * rng.standard_normal(times.shape))
    return LinkTravelTimeTable(table.network, times, table.period_length)
