"""Queue traffic simulation tests"""
import numpy as np
import pytest

import conftest
from wayfarer import network
from wayfarer import physsim
from wayfarer.geometry import Point


def exits(result, link_id):
    return [r.exit for r in result.records if r.link_id == link_id]


def test_single_vehicle_moves_at_free_flow():
    net = conftest.line_network(lengths=(1000.0, 500.0))
    route = physsim.VehicleRoute("car-1", ("l0", "l1"), 100.0)
    result = physsim.simulate(net, [route])
    assert result.travel_times() == {"car-1": (100.0, 175.0)}
    assert result.occupants == {}
    assert result.teleported == []


def test_bottleneck_spaces_exits_by_capacity():
    net = conftest.line_network(lengths=(1000.0,), capacity=1800.0)
    routes = [physsim.VehicleRoute(f"car-{i}", ("l0",), 0.0)
              for i in range(10)]
    times = exits(physsim.simulate(net, routes), "l0")
    assert times == [50.0 + 2.0 * i for i in range(10)]
    assert np.diff(times).tolist() == [2.0] * 9


def test_full_downstream_link_holds_vehicles_back():
    net = network.Network(
            conftest.line_network(lengths=(1000.0, 15.0)).nodes,
            [conftest.make_link("l0", "n0", "n1", 1000.0, 20.0, 3600.0),
             conftest.make_link("l1", "n1", "n2", 15.0, 20.0, 360.0)],
            {"z": Point(0.0, 0.0)})
    assert physsim.storage_capacity(net.links["l1"],
                                    physsim.PhysSimParams()) == 2
    routes = [physsim.VehicleRoute(f"car-{i}", ("l0", "l1"), 0.0)
              for i in range(5)]
    result = physsim.simulate(net, routes)
    upstream = {r.vehicle_id: r.exit for r in result.records
                if r.link_id == "l0"}
    downstream = {r.vehicle_id: r.exit for r in result.records
                  if r.link_id == "l1"}
    assert upstream["car-2"] == pytest.approx(52.0)
    # car-3 waits on l0 until car-1 leaves l1
    assert upstream["car-3"] == pytest.approx(downstream["car-1"])
    assert upstream["car-3"] > 53.0
    assert upstream["car-4"] == pytest.approx(downstream["car-2"])


def test_stopping_vehicles_dwell_on_their_last_link():
    net = conftest.line_network(lengths=(1000.0, 500.0))
    route = physsim.VehicleRoute("rh-1", ("l0", "l1"), 0.0, stops=True)
    result = physsim.simulate(net, [route],
                              physsim.PhysSimParams(stop_delay=30.0))
    assert result.travel_times()["rh-1"] == (0.0, 105.0)


def random_routes(rng, net, count):
    nodes = sorted(net.nodes)
    table = network.LinkTravelTimeTable.free_flow(net)
    routes = []
    for i in range(count):
        a, b = rng.choice(len(nodes), size=2, replace=False)
        path = network.shortest_path(net, nodes[a], nodes[b], 0.0, "car",
                                     table)
        routes.append(physsim.VehicleRoute(
                f"v{i}", path.links, float(rng.uniform(0.0, 600.0)),
                cacc=bool(rng.random() < 0.3)))
    return routes


def test_vehicles_are_conserved_on_random_networks():
    rng = np.random.default_rng(8)
    for _ in range(50):
        net = conftest.grid_network(
                size=3, spacing=float(rng.uniform(20.0, 300.0)),
                capacity=float(rng.uniform(200.0, 1200.0)))
        routes = random_routes(rng, net, int(rng.integers(5, 60)))
        result = physsim.simulate(net, routes)

        done = {}
        for record in result.records:
            done.setdefault(record.vehicle_id, []).append(record)
        occupying = {v: lid for lid, vs in result.occupants.items()
                     for v in vs}
        assert len(occupying) == sum(len(vs)
                                     for vs in result.occupants.values())
        completed = 0
        for route in routes:
            passed = [r.link_id for r in done.get(route.vehicle_id, [])]
            assert tuple(passed) == route.links[:len(passed)]
            if route.vehicle_id in result.teleported:
                assert len(passed) < len(route.links)
                if route.vehicle_id in occupying:
                    assert occupying[route.vehicle_id] == \
                        route.links[len(passed)]
                else:
                    assert passed == []
            else:
                assert len(passed) == len(route.links)
                assert route.vehicle_id not in occupying
                completed += 1
        assert completed + len(result.teleported) == len(routes)
        for link_id in net.links:
            on_link = [r for r in result.records if r.link_id == link_id]
            order = sorted(on_link, key=lambda r: r.enter)
            assert [r.exit for r in order] == sorted(r.exit for r in order)


@pytest.mark.parametrize(
        "share, factor", [(0.0, 1.0), (0.25, 1.15), (0.5, 1.3), (1.0, 2.0)])
def test_cacc_multiplier_interpolates(share, factor):
    assert physsim.cacc_multiplier(physsim.CaccCurve(), share) == \
        pytest.approx(factor)


def test_cacc_curve_must_start_at_one():
    with pytest.raises(ValueError):
        physsim.CaccCurve(((0.0, 1.2), (1.0, 2.0)))
    with pytest.raises(ValueError):
        physsim.cacc_multiplier(physsim.CaccCurve(), 1.5)


def test_cacc_vehicles_raise_throughput():
    net = conftest.line_network(lengths=(1000.0,), capacity=1800.0)
    plain = [physsim.VehicleRoute(f"car-{i}", ("l0",), 0.0)
             for i in range(10)]
    automated = [physsim.VehicleRoute(f"cav-{i}", ("l0",), 0.0, cacc=True)
                 for i in range(10)]
    assert exits(physsim.simulate(net, automated), "l0")[-1] < \
        exits(physsim.simulate(net, plain), "l0")[-1]


def test_linkstats_fall_back_to_free_flow():
    net = conftest.line_network(lengths=(1000.0, 500.0))
    routes = [physsim.VehicleRoute("car-1", ("l0",), 0.0),
              physsim.VehicleRoute("bus-1", ("l0",), 0.0, heavy_duty=True)]
    stats = physsim.compute_linkstats(
            net, physsim.simulate(net, routes), periods=2)
    assert len(stats) == 4
    first = stats[(stats.link_id == "l0") & (stats.period_start_s == 0.0)]
    assert first.travel_time_s.item() == pytest.approx(51.0)
    assert (first.volume_ld.item(), first.volume_hd.item()) == (1, 1)
    idle = stats[stats.link_id == "l1"]
    assert idle.travel_time_s.tolist() == [25.0, 25.0]


def test_relaxation_gap_is_zero_when_plans_match_traffic():
    net = conftest.line_network(lengths=(1000.0,))
    result = physsim.simulate(net, [physsim.VehicleRoute("c", ("l0",), 0.0)])
    stats = physsim.compute_linkstats(net, result, periods=1)
    assert physsim.relaxation_gap(stats[["link_id", "period_start_s",
                                         "travel_time_s"]], stats) == 0.0
    planned = stats.assign(travel_time_s=stats.travel_time_s * 2)
    assert physsim.relaxation_gap(
            planned[["link_id", "period_start_s", "travel_time_s"]],
            stats) == pytest.approx(1.0)
