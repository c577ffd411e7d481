"""Network, link travel time and shortest path tests"""
import math

import networkx as nx
import numpy as np
import pandas as pd
import pytest

import conftest
from wayfarer import network
from wayfarer.geometry import Point


def test_free_flow_path_along_a_line():
    net = conftest.line_network(lengths=(1000.0, 500.0))
    table = network.LinkTravelTimeTable.free_flow(net)
    route = network.shortest_path(net, "n0", "n2", 100.0, "car", table)
    assert route.links == ("l0", "l1")
    assert route.distance == 1500.0
    assert route.arrive == pytest.approx(100.0 + 75.0)


def test_same_node_gives_an_empty_route():
    net = conftest.line_network()
    table = network.LinkTravelTimeTable.free_flow(net)
    route = network.shortest_path(net, "n1", "n1", 10.0, "car", table)
    assert route.links == ()
    assert route.duration == 0.0


def test_no_path_against_one_way_links():
    net = conftest.line_network()
    table = network.LinkTravelTimeTable.free_flow(net)
    with pytest.raises(network.Unreachable):
        network.shortest_path(net, "n1", "n0", 0.0, "car", table)


def test_car_only_link_is_not_walkable():
    net = network.Network(
            {"a": Point(0, 0), "b": Point(100, 0)},
            [conftest.make_link("ab", "a", "b", modes=("car",))],
            {"z": Point(0, 0)})
    table = network.LinkTravelTimeTable.free_flow(net)
    with pytest.raises(network.Unreachable):
        network.shortest_path(net, "a", "b", 0.0, "walk", table)


def test_walk_speed_follows_grade():
    speeds = network.ModeSpeeds(walk=1.5)
    assert speeds.speed("walk", 0.0) == 1.5
    assert speeds.speed("walk", 6.0) == pytest.approx(0.9)
    assert speeds.speed("walk", 12.0) == pytest.approx(0.9)
    assert speeds.speed("walk", -3.0) == pytest.approx(1.65)


def test_paths_match_exhaustive_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(20):
        nodes = {f"{i}_{j}": Point(j * 100.0, i * 100.0)
                 for i in range(3) for j in range(3)}
        links = []
        for i in range(3):
            for j in range(3):
                for a, b in ((i, j + 1), (i + 1, j), (i, j - 1), (i - 1, j)):
                    if 0 <= a < 3 and 0 <= b < 3 and rng.random() < 0.8:
                        links.append(conftest.make_link(
                            f"{i}_{j}-{a}_{b}", f"{i}_{j}", f"{a}_{b}",
                            float(rng.uniform(50, 500)),
                            float(rng.uniform(5, 25))))
        net = network.Network(nodes, links, {"z": Point(0, 0)})
        table = network.LinkTravelTimeTable.free_flow(net)
        graph = nx.DiGraph()
        graph.add_weighted_edges_from(
                (l.from_node, l.to_node, l.free_flow_time)
                for l in net.links.values())
        if "0_0" not in graph or "2_2" not in graph or \
                not nx.has_path(graph, "0_0", "2_2"):
            continue
        optimum = min(
                nx.path_weight(graph, path, "weight")
                for path in nx.all_simple_paths(graph, "0_0", "2_2"))
        route = network.shortest_path(net, "0_0", "2_2", 0.0, "car", table)
        assert route.duration == pytest.approx(optimum)


def test_travel_times_stay_first_in_first_out():
    net = conftest.line_network(lengths=(1000.0, 1000.0))
    times = np.array([[50.0, 50.0], [50.0, 50.0]])
    times[0, 0] = 3000.0
    table = network.LinkTravelTimeTable(net, times, period_length=3600.0)
    # entering just before the period boundary must not beat an earlier entry
    early = 3500.0 + table.travel_time("l0", 3500.0)
    late = 3600.0 + table.travel_time("l0", 3600.0)
    assert late >= early


def test_table_never_drops_below_free_flow():
    net = conftest.line_network(lengths=(1000.0, 1000.0))
    table = network.LinkTravelTimeTable(net, np.full((2, 3), 1.0))
    assert table.travel_time("l0", 0.0) == pytest.approx(50.0)


def test_update_link_times_replaces_observed_cells():
    net = conftest.line_network(lengths=(1000.0, 1000.0))
    table = network.LinkTravelTimeTable.free_flow(net, periods=3)
    linkstats = pd.DataFrame({"link_id": ["l0"], "period_start_s": [3600.0],
                              "travel_time_s": [80.0]})
    updated = network.update_link_times(table, linkstats)
    assert updated.travel_time("l0", 4000.0) == 80.0
    assert updated.travel_time("l0", 0.0) == 50.0
    assert updated.travel_time("l1", 4000.0) == 50.0


def test_noise_needs_a_stream():
    net = conftest.line_network()
    table = network.LinkTravelTimeTable.free_flow(net)
    with pytest.raises(ValueError):
        network.update_link_times(table, table.to_frame(), noise_sigma=0.1)


def test_link_times_frame_covers_every_cell():
    net = conftest.line_network(lengths=(1000.0, 1000.0))
    frame = network.LinkTravelTimeTable.free_flow(net, periods=4).to_frame()
    assert len(frame) == 2 * 4
    assert set(frame["link_id"]) == {"l0", "l1"}


def test_links_join_the_nearest_zone():
    net = conftest.line_network(lengths=(1000.0, 1000.0))
    assert net.link_taz["l0"] in ("z0", "z1")
    assert net.taz_of(Point(1900.0, 10.0)) == "z2"
    node, snap = net.nearest_node(Point(990.0, 0.0), "car")
    assert node == "n1"
    assert math.isclose(snap, 10.0)


def test_zone_centroids_are_exposed():
    net = conftest.line_network(lengths=(1000.0, 1000.0))
    assert net.taz_centroids == {"z0": Point(0.0, 0.0),
                                 "z1": Point(1000.0, 0.0),
                                 "z2": Point(2000.0, 0.0)}
