"""Queue-based traffic flow simulation"""
import collections
import dataclasses
import heapq
import itertools
import logging
import math
import typing

import numpy as np
import pandas as pd

from . import errors

LOG = logging.getLogger(__name__)


class GridlockDetected(errors.WayfarerError):
    """Vehicles remain queued but no exit can ever happen"""

    def __init__(self, stuck):
        self.stuck = stuck
        super().__init__(f"{len(stuck)} vehicles gridlocked")


@dataclasses.dataclass(frozen=True)
class CaccCurve:
    """Capacity multiplier as a piecewise-linear function of CACC share"""
    breakpoints: typing.Tuple[typing.Tuple[float, float], ...] = (
            (0.0, 1.0), (0.5, 1.3), (1.0, 2.0))

    def __post_init__(self):
        shares = [s for s, _ in self.breakpoints]
        factors = [f for _, f in self.breakpoints]
        if not self.breakpoints or shares[0] != 0.0 or factors[0] != 1.0:
            raise ValueError("CACC curve must start at (0, 1)")
        if any(b < a for a, b in zip(shares, shares[1:])) or \
                any(b < a for a, b in zip(factors, factors[1:])):
            raise ValueError("CACC curve must be non-decreasing")


def cacc_multiplier(curve, penetration):
    """
    Flow capacity multiplier for a share of CACC vehicles

    Args:
        curve (CaccCurve): breakpoints
        penetration (float): share of CACC vehicles in [0, 1]

    Returns:
        float: the multiplier
    """
    if not 0.0 <= penetration <= 1.0:
        raise ValueError(f"penetration {penetration} not in [0, 1]")
    shares, factors = zip(*curve.breakpoints)
    return float(np.interp(penetration, shares, factors))


@dataclasses.dataclass(frozen=True)
class PhysSimParams:
    """
    * flow_factor, storage_factor: scale capacities for sampled populations
    * vehicle_length: meters of storage one vehicle takes
    * cacc_level: automation level from which vehicles count as CACC
    * stop_delay: extra seconds on the last link of routes that stop to
      pick up or drop off
    """
    period_length: float = 3600.0
    flow_factor: float = 1.0
    storage_factor: float = 1.0
    vehicle_length: float = 7.5
    cacc_level: int = 3
    cacc_curve: CaccCurve = CaccCurve()
    stop_delay: float = 0.0

    @classmethod
    def from_config(cls, config):
        return cls(
                period_length=float(config["physsim.periodLength"]),
                flow_factor=float(config["physsim.flowCapacityFactor"]),
                storage_factor=float(config["physsim.storageCapacityFactor"]),
                vehicle_length=float(config["physsim.effectiveVehicleLength"]),
                cacc_level=int(config["physsim.caccAutomationLevel"]),
                cacc_curve=CaccCurve(tuple(
                    (float(s), float(f))
                    for s, f in config["physsim.caccCurve"])),
                stop_delay=float(config["physsim.pickupDropoffDelaySec"]))


@dataclasses.dataclass(frozen=True)
class VehicleRoute:
    vehicle_id: str
    links: typing.Tuple[str, ...]
    depart: float
    cacc: bool = False
    heavy_duty: bool = False
    stops: bool = False


@dataclasses.dataclass(frozen=True)
class LinkRecord:
    vehicle_id: str
    link_id: str
    enter: float
    exit: float
    heavy_duty: bool = False


@dataclasses.dataclass
class SimulationResult:
    """
    * records: completed link traversals
    * occupants: link id -> vehicles still on it at the end
    * teleported: vehicles moved to their destination after gridlock
    """
    records: typing.List[LinkRecord]
    occupants: typing.Dict[str, typing.List[str]]
    teleported: typing.List[str]

    def to_frame(self):
        return pd.DataFrame([dataclasses.astuple(r) for r in self.records],
                            columns=["vehicle_id", "link_id", "enter", "exit",
                                     "heavy_duty"])

    def travel_times(self):
        """vehicle id -> (first entry, last exit)"""
        spans = {}
        for record in self.records:
            start, end = spans.get(record.vehicle_id, (record.enter,
                                                       record.exit))
            spans[record.vehicle_id] = (min(start, record.enter),
                                        max(end, record.exit))
        return spans


def storage_capacity(link, params):
    return max(1, math.floor(link.length * link.lanes / params.vehicle_length
                             * params.storage_factor))


def _cacc_shares(net, routes, params):
    """CACC share per (link, period), with entries estimated at free flow"""
    counts = collections.Counter()
    cacc = collections.Counter()
    for route in routes:
        t = route.depart
        for link_id in route.links:
            key = (link_id, int(t // params.period_length))
            counts[key] += 1
            cacc[key] += route.cacc
            t += net.links[link_id].free_flow_time
    return {key: cacc[key] / counts[key] for key in counts}


@dataclasses.dataclass
class _Traveller:
    route: VehicleRoute
    position: int = 0
    enter: float = 0.0
    earliest: float = 0.0


def simulate(net, routes, params=PhysSimParams()):
    """
    Move every route through finite-capacity link queues

    A vehicle leaves a link once it has spent the free-flow time on it, the
    link's outflow allows it and the next link has storage room. Vehicles
    leave each link in the order they entered it.

    Args:
        net (network.Network): the network
        routes (iterable of VehicleRoute): executed car routes
        params (PhysSimParams): capacities

    Returns:
        SimulationResult: the traversal log
    """
    routes = [r for r in routes if r.links]
    for route in routes:
        missing = [l for l in route.links if l not in net.links]
        if missing:
            raise KeyError(f"route of {route.vehicle_id} uses unknown link "
                           f"{missing[0]}")
    shares = _cacc_shares(net, routes, params)
    storage = {lid: storage_capacity(link, params)
               for lid, link in net.links.items()}
    queues = collections.defaultdict(collections.deque)
    last_exit = {}
    waiters = collections.defaultdict(list)
    records = []
    sequence = itertools.count()
    events = []

    def gap(link_id, t):
        link = net.links[link_id]
        share = shares.get((link_id, int(t // params.period_length)), 0.0)
        flow = link.capacity / 3600.0 * params.flow_factor * \
            cacc_multiplier(params.cacc_curve, share)
        return 1.0 / flow

    def push(t, kind, key):
        heapq.heappush(events, (t, next(sequence), kind, key))

    def enter(traveller, link_id, t):
        link = net.links[link_id]
        traveller.enter = t
        traveller.earliest = t + link.free_flow_time
        if traveller.route.stops and \
                traveller.position == len(traveller.route.links) - 1:
            traveller.earliest += params.stop_delay
        queues[link_id].append(traveller)
        if len(queues[link_id]) == 1:
            push(traveller.earliest, "exit", link_id)

    def free_slot(link_id, t):
        for waiting in waiters.pop(link_id, ()):
            push(t, *waiting)

    for index, route in enumerate(routes):
        push(route.depart, "depart", index)

    while events:
        t, _, kind, key = heapq.heappop(events)
        if kind == "depart":
            traveller = _Traveller(routes[key])
            first = traveller.route.links[0]
            if len(queues[first]) >= storage[first]:
                waiters[first].append(("depart", key))
                continue
            enter(traveller, first, t)
            continue

        queue = queues[key]
        if not queue:
            continue
        head = queue[0]
        ready = max(head.earliest, last_exit.get(key, -math.inf)
                    + gap(key, t))
        if t < ready:
            push(ready, "exit", key)
            continue
        links = head.route.links
        following = links[head.position + 1] \
            if head.position + 1 < len(links) else None
        if following is not None and \
                len(queues[following]) >= storage[following]:
            if ("exit", key) not in waiters[following]:
                waiters[following].append(("exit", key))
            continue
        queue.popleft()
        last_exit[key] = t
        records.append(LinkRecord(head.route.vehicle_id, key, head.enter, t,
                                  head.route.heavy_duty))
        if following is not None:
            head.position += 1
            enter(head, following, t)
        free_slot(key, t)
        if queue:
            push(max(queue[0].earliest, t + gap(key, t)), "exit", key)

    occupants = {lid: [v.route.vehicle_id for v in queue]
                 for lid, queue in sorted(queues.items()) if queue}
    stuck = [vid for vehicles in occupants.values() for vid in vehicles]
    stuck += [routes[key].vehicle_id for waiting in waiters.values()
              for kind, key in waiting if kind == "depart"]
    if stuck:
        LOG.warning("%s; teleporting them to their destinations",
                    GridlockDetected(stuck))
    return SimulationResult(records, occupants, sorted(set(stuck)))


def compute_linkstats(net, result, period_length=3600.0, periods=30):
    """
    Congested travel time and volume per link and period

    Travel times are means over vehicles leaving the link in the period,
    the free-flow time where none did.

    Returns:
        pandas.DataFrame: link_id, period_start_s, travel_time_s, volume_ld,
        volume_hd
    """
    frame = result.to_frame()
    link_ids = list(net.links)
    grid = pd.MultiIndex.from_product(
            [link_ids, np.arange(periods) * float(period_length)],
            names=["link_id", "period_start_s"])
    free = pd.Series([net.links[l].free_flow_time for l, _ in grid],
                     index=grid)
    if frame.empty:
        stats = pd.DataFrame(index=grid, columns=["travel_time_s",
                                                  "volume_ld", "volume_hd"])
    else:
        period = np.minimum(frame["exit"] // period_length, periods - 1)
        frame = frame.assign(period_start_s=period * float(period_length),
                             travel_time_s=frame["exit"] - frame["enter"],
                             volume_ld=~frame["heavy_duty"].astype(bool),
                             volume_hd=frame["heavy_duty"].astype(bool))
        stats = frame.groupby(["link_id", "period_start_s"]).agg(
                travel_time_s=("travel_time_s", "mean"),
                volume_ld=("volume_ld", "sum"),
                volume_hd=("volume_hd", "sum")).reindex(grid)
    stats["travel_time_s"] = stats["travel_time_s"].astype(float).fillna(free)
    for column in ("volume_ld", "volume_hd"):
        stats[column] = stats[column].fillna(0).astype(int)
    return stats.reset_index()


def relaxation_gap(agentsim_times, linkstats):
    """
    Volume-weighted mean relative difference between the times agents
    planned with and the times traffic produced

    Args:
        agentsim_times (pandas.DataFrame): link_id, period_start_s,
            travel_time_s used during the day
        linkstats (pandas.DataFrame): output of compute_linkstats

    Returns:
        float: the gap, 0 when no vehicle moved
    """
    merged = linkstats.merge(agentsim_times, on=["link_id", "period_start_s"],
                             suffixes=("", "_planned"))
    weights = merged["volume_ld"] + merged["volume_hd"]
    if weights.sum() == 0:
        return 0.0
    relative = (merged["travel_time_s_planned"]
                - merged["travel_time_s"]).abs() / merged["travel_time_s"]
    return float(np.average(relative, weights=weights))
