"""Test configuration"""
import os

import numpy as np
import pytest

from wayfarer import config as cfg
from wayfarer import network
from wayfarer import scenario as scn
from wayfarer import toy
from wayfarer.geometry import Point


def make_link(link_id, from_node, to_node, length=1000.0, free_speed=20.0,
              capacity=1800.0, lanes=1.0, modes=("car", "walk", "bike")):
    return network.Link(link_id, from_node, to_node, length, free_speed,
                        capacity, lanes, frozenset(modes))


def line_network(lengths=(1000.0,), free_speed=20.0, capacity=1800.0,
                 lanes=1.0, both_ways=False):
    """
    Nodes n0..nk on the x axis joined by links l0..l(k-1)

    Returns:
        network.Network: one TAZ per node
    """
    nodes = {"n0": Point(0.0, 0.0)}
    links = []
    x = 0.0
    for i, length in enumerate(lengths):
        x += length
        nodes[f"n{i + 1}"] = Point(x, 0.0)
        links.append(make_link(f"l{i}", f"n{i}", f"n{i + 1}", length,
                               free_speed, capacity, lanes))
        if both_ways:
            links.append(make_link(f"r{i}", f"n{i + 1}", f"n{i}", length,
                                   free_speed, capacity, lanes))
    centroids = {f"z{i}": p for i, p in enumerate(nodes.values())}
    return network.Network(nodes, links, centroids)


def grid_network(size=3, spacing=500.0, free_speed=10.0, capacity=600.0):
    """A size x size grid with two-way links and one TAZ per node"""
    nodes = {f"{i}_{j}": Point(j * spacing, i * spacing)
             for i in range(size) for j in range(size)}
    links = []
    for i in range(size):
        for j in range(size):
            for a, b in ((i, j + 1), (i + 1, j)):
                if a < size and b < size:
                    links.append(make_link(f"{i}_{j}-{a}_{b}", f"{i}_{j}",
                                           f"{a}_{b}", spacing, free_speed,
                                           capacity))
                    links.append(make_link(f"{a}_{b}-{i}_{j}", f"{a}_{b}",
                                           f"{i}_{j}", spacing, free_speed,
                                           capacity))
    return network.Network(nodes, links, dict(nodes))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line():
    return line_network(lengths=(1000.0, 1000.0), both_ways=True)


@pytest.fixture
def grid():
    return grid_network()


@pytest.fixture(scope="session")
def small_toy_dir(tmp_path_factory):
    """A 6x6 toy scenario with 120 persons"""
    directory = str(tmp_path_factory.mktemp("small_toy"))
    toy.make_toy(directory, size=6, persons=120, seed=7)
    return directory


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory):
    """The full-size toy scenario"""
    directory = str(tmp_path_factory.mktemp("toy"))
    toy.make_toy(directory)
    return directory


def load_toy(directory, overrides=()):
    config = cfg.Config.load(os.path.join(directory, "config.yaml"), overrides)
    return config, scn.load_scenario(config.path("inputDirectory"), config)


@pytest.fixture
def small_toy(small_toy_dir):
    return load_toy(small_toy_dir)
