import math

import pytest

from v2isim.roadnet import (NetworkError, Route, build_grid, build_one_junction,
                            fastest_path, undirected_edge_count)


def free_flow(net):
    return lambda eid: net.edges[eid].length / net.edges[eid].speed_limit


class TestOneJunction:
    def test_topology(self):
        net = build_one_junction(300.0)
        assert net.junctions == ["J"]
        assert sorted(net.edges) == ["in_s", "in_w", "out_e", "out_n"]
        assert all(e.length == 300.0 for e in net.edges.values())
        assert sorted(net.incoming["J"]) == ["in_s", "in_w"]
        assert sorted(net.outgoing["J"]) == ["out_e", "out_n"]

    def test_incoming_groups_are_antagonistic(self):
        net = build_one_junction(300.0)
        ns, ew = net.incoming_groups("J")
        assert ns == ["in_s"]
        assert ew == ["in_w"]

    def test_bad_length_rejected(self):
        with pytest.raises(NetworkError):
            build_one_junction(0.0)


class TestGrid:
    def test_counts(self):
        net = build_grid(4, 500.0)
        assert len(net.junctions) == 16
        # 24 internal links (two directed edges each) + 16 stub pairs
        assert len(net.edges) == 24 * 2 + 16 * 2
        assert undirected_edge_count(net) == 40

    def test_stub_distribution(self):
        net = build_grid(4, 500.0)
        stubs = {}
        for e in net.edges.values():
            if e.is_external and e.frm.startswith("X"):
                stubs[e.to] = stubs.get(e.to, 0) + 1
        corners = {"J00", "J03", "J30", "J33"}
        for jid, count in stubs.items():
            assert count == (2 if jid in corners else 1)
        assert sum(stubs.values()) == 16
        inner = {f"J{i}{j}" for i in (1, 2) for j in (1, 2)}
        assert inner.isdisjoint(stubs)

    def test_junction_coordinates(self):
        net = build_grid(4, 500.0)
        assert net.node_xy("J00") == (0.0, 0.0)
        assert net.node_xy("J31") == (1500.0, 500.0)

    def test_zones_partition_external_edges(self):
        net = build_grid(4, 500.0)
        assert sorted(net.zones) == list(range(9))
        external = {eid for eid, e in net.edges.items() if e.is_external}
        seen = []
        for z in net.zones.values():
            if z.id == 4:
                continue
            seen.extend(z.entry_edges)
            seen.extend(z.exit_edges)
        assert sorted(seen) == sorted(external)
        assert len(seen) == len(set(seen))

    def test_corner_stub_zone(self):
        net = build_grid(4, 500.0)
        assert "in_00w" in net.zones[0].entry_edges
        assert "in_00s" in net.zones[0].entry_edges
        assert "out_33n" in net.zones[8].exit_edges

    def test_middle_perimeter_zone(self):
        net = build_grid(4, 500.0)
        # J10 is at x=500 (middle third), y=0 (bottom third) -> zone 1
        assert "in_10s" in net.zones[1].entry_edges

    def test_center_zone_uses_inner_square_edges(self):
        net = build_grid(4, 500.0)
        center = net.zones[4]
        inner = {f"J{i}{j}" for i in (1, 2) for j in (1, 2)}
        assert len(center.entry_edges) == 8
        assert center.entry_edges == center.exit_edges
        for eid in center.entry_edges:
            e = net.edges[eid]
            assert e.frm in inner and e.to in inner

    def test_minimum_size_enforced(self):
        with pytest.raises(NetworkError):
            build_grid(1, 500.0)


class TestGeometry:
    def test_edge_heading_is_unit_vector(self):
        net = build_one_junction(300.0)
        hx, hy = net.edge_heading("in_w")  # west approach points east
        assert (hx, hy) == (1.0, 0.0)
        hx, hy = net.edge_heading("in_s")  # south approach points north
        assert (hx, hy) == (0.0, 1.0)

    def test_position_xy_interpolates(self):
        net = build_one_junction(300.0)
        x, y = net.position_xy("in_w", 100.0)
        assert math.isclose(x, -200.0) and y == 0.0


class TestFastestPath:
    def test_straight_corridor_unique_route(self):
        net = build_grid(4, 500.0)
        route = fastest_path(net, "in_00w", "out_30e", free_flow(net))
        assert route.edges == ("in_00w", "h00_e", "h10_e", "h20_e", "out_30e")

    def test_origin_equals_destination(self):
        net = build_grid(4, 500.0)
        assert fastest_path(net, "h00_e", "h00_e", free_flow(net)) == Route(("h00_e",))

    def test_avoids_congested_edge_when_detour_cheaper(self):
        net = build_grid(4, 500.0)
        # congested straight link at mean speed 1 m/s: 500 s to traverse,
        # while the 3-edge detour costs 3 * 500 / 13.9 ~ 108 s
        ff = free_flow(net)
        cost = lambda eid: 500.0 if eid == "h10_e" else ff(eid)
        route = fastest_path(net, "in_00w", "out_30e", cost)
        assert "h10_e" not in route.edges
        base = fastest_path(net, "in_00w", "out_30e", ff)
        assert "h10_e" in base.edges

    def test_unreachable_destination_raises(self):
        net = build_one_junction(300.0)  # exits are dead ends
        with pytest.raises(NetworkError):
            fastest_path(net, "out_e", "in_w", free_flow(net))

    def test_missing_edge_raises(self):
        net = build_one_junction(300.0)
        with pytest.raises(NetworkError):
            fastest_path(net, "in_w", "nope", free_flow(net))

    def test_routes_are_connected_and_acyclic(self):
        net = build_grid(4, 500.0)
        ff = free_flow(net)
        entries = sorted(e.id for e in net.edges.values()
                         if e.is_external and e.frm.startswith("X"))
        exits = sorted(e.id for e in net.edges.values()
                       if e.is_external and e.to.startswith("X"))
        for origin in entries[::3]:
            for dest in exits[::3]:
                route = fastest_path(net, origin, dest, ff)
                assert len(set(route.edges)) == len(route.edges)
                for a, b in zip(route.edges, route.edges[1:]):
                    assert net.edges[a].to == net.edges[b].frm

    def test_cost_matches_brute_force_on_small_grid(self):
        net = build_grid(2, 100.0)
        # deterministic, non-uniform edge costs
        cost = lambda eid: 1.0 + (hash(eid) % 7) / 10.0

        def all_simple_paths(cur, dest, seen):
            if cur == dest:
                yield [cur]
                return
            for nxt in net.outgoing[net.edges[cur].to]:
                if nxt not in seen:
                    for tail in all_simple_paths(nxt, dest, seen | {nxt}):
                        yield [cur] + tail

        origin, dest = "in_00w", "out_11n"
        best = min(sum(cost(e) for e in p)
                   for p in all_simple_paths(origin, dest, {origin}))
        route = fastest_path(net, origin, dest, cost)
        assert math.isclose(sum(cost(e) for e in route.edges), best)
