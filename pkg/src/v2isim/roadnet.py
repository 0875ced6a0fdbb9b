"""Directed one-lane road graph, scenario network generators and routing."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable

DEFAULT_SPEED_LIMIT = 13.9  # m/s, urban 50 km/h


class NetworkError(Exception):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Edge:
    id: str
    frm: str
    to: str
    length: float
    speed_limit: float = DEFAULT_SPEED_LIMIT
    is_external: bool = False  # entry/exit stub outside the junction lattice

    def __post_init__(self):
        if self.length <= 0:
            raise NetworkError(f"edge {self.id}: non-positive length {self.length}")


@dataclass(frozen=True)
class Route:
    """Ordered, connected edge list fixed at departure; never re-routed."""

    edges: tuple[str, ...]

    @property
    def origin(self) -> str:
        return self.edges[0]

    @property
    def destination(self) -> str:
        return self.edges[-1]


@dataclass
class Zone:
    """Group of external entry/exit edges used as demand origins/destinations."""

    id: int
    entry_edges: list[str] = field(default_factory=list)
    exit_edges: list[str] = field(default_factory=list)


class RoadNetwork:
    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        self.incoming: dict[str, list[str]] = {}
        self.outgoing: dict[str, list[str]] = {}
        self.junctions: list[str] = []  # nodes carrying a traffic light
        self.zones: dict[int, Zone] = {}

    def add_node(self, node: Node, junction: bool = False) -> None:
        self.nodes[node.id] = node
        self.incoming.setdefault(node.id, [])
        self.outgoing.setdefault(node.id, [])
        if junction:
            self.junctions.append(node.id)

    def add_edge(self, edge: Edge) -> None:
        if edge.frm not in self.nodes or edge.to not in self.nodes:
            raise NetworkError(f"edge {edge.id}: unknown endpoint")
        self.edges[edge.id] = edge
        self.incoming[edge.to].append(edge.id)
        self.outgoing[edge.frm].append(edge.id)

    def node_xy(self, node_id: str) -> tuple[float, float]:
        n = self.nodes[node_id]
        return n.x, n.y

    def edge_heading(self, edge_id: str) -> tuple[float, float]:
        """Unit direction vector of an edge (straight-line geometry)."""
        e = self.edges[edge_id]
        x0, y0 = self.node_xy(e.frm)
        x1, y1 = self.node_xy(e.to)
        d = math.hypot(x1 - x0, y1 - y0)
        return (x1 - x0) / d, (y1 - y0) / d

    def position_xy(self, edge_id: str, offset: float) -> tuple[float, float]:
        """World coordinates of a point `offset` meters from the edge start."""
        e = self.edges[edge_id]
        x0, y0 = self.node_xy(e.frm)
        ux, uy = self.edge_heading(edge_id)
        return x0 + ux * offset, y0 + uy * offset

    def incoming_groups(self, junction_id: str) -> tuple[list[str], list[str]]:
        """Partition a junction's incoming edges into two antagonistic phase
        groups: north-south approaches vs east-west approaches."""
        ns, ew = [], []
        for eid in sorted(self.incoming[junction_id]):
            ux, uy = self.edge_heading(eid)
            (ns if abs(uy) >= abs(ux) else ew).append(eid)
        return ns, ew

    def export_listing(self) -> str:
        """Plain-text node/edge listing for debugging and golden-file tests."""
        lines = []
        for nid in sorted(self.nodes):
            n = self.nodes[nid]
            tag = "junction" if nid in self.junctions else "node"
            lines.append(f"{tag} {nid} {n.x:.1f} {n.y:.1f}")
        for eid in sorted(self.edges):
            e = self.edges[eid]
            ext = " external" if e.is_external else ""
            lines.append(f"edge {eid} {e.frm} {e.to} {e.length:.1f}{ext}")
        return "\n".join(lines) + "\n"


def build_one_junction(edge_length: float, speed_limit: float = DEFAULT_SPEED_LIMIT) -> RoadNetwork:
    """One junction with two orthogonal one-lane approaches and two exits.

    Vehicles traverse two edges, a total path of 2 * edge_length.
    """
    if edge_length <= 0:
        raise NetworkError("edge_length must be positive")
    net = RoadNetwork()
    L = edge_length
    net.add_node(Node("J", 0.0, 0.0), junction=True)
    net.add_node(Node("W", -L, 0.0))
    net.add_node(Node("S", 0.0, -L))
    net.add_node(Node("E", L, 0.0))
    net.add_node(Node("N", 0.0, L))
    net.add_edge(Edge("in_w", "W", "J", L, speed_limit, is_external=True))
    net.add_edge(Edge("in_s", "S", "J", L, speed_limit, is_external=True))
    net.add_edge(Edge("out_e", "J", "E", L, speed_limit, is_external=True))
    net.add_edge(Edge("out_n", "J", "N", L, speed_limit, is_external=True))
    return net


def _zone_index(coord: float, lo: float, hi: float) -> int:
    third = (hi - lo) / 3.0
    if coord < lo + third:
        return 0
    if coord > hi - third:
        return 2
    return 1


def build_grid(n: int, edge_length: float, speed_limit: float = DEFAULT_SPEED_LIMIT) -> RoadNetwork:
    """Regular n x n junction lattice with one-lane directed edges.

    Internal links are bidirectional (two directed edges each). Perimeter
    junctions carry external entry/exit stubs, one per outward direction on
    corners and one on every other perimeter node, so the 4x4 instance has
    16 junctions and 40 undirected edges (24 internal + 16 stubs).

    Nine zones tile the lattice 3x3; a stub belongs to the zone of its
    perimeter junction, and the center zone uses the internal edges bounding
    the center tile as demand origins/destinations.
    """
    if n < 2:
        raise NetworkError("grid requires n >= 2")
    net = RoadNetwork()
    L = edge_length
    for i in range(n):
        for j in range(n):
            net.add_node(Node(f"J{i}{j}", i * L, j * L), junction=True)
    # internal bidirectional links
    for i in range(n):
        for j in range(n):
            if i + 1 < n:
                a, b = f"J{i}{j}", f"J{i + 1}{j}"
                net.add_edge(Edge(f"h{i}{j}_e", a, b, L, speed_limit))
                net.add_edge(Edge(f"h{i}{j}_w", b, a, L, speed_limit))
            if j + 1 < n:
                a, b = f"J{i}{j}", f"J{i}{j + 1}"
                net.add_edge(Edge(f"v{i}{j}_n", a, b, L, speed_limit))
                net.add_edge(Edge(f"v{i}{j}_s", b, a, L, speed_limit))
    # external stubs: one per outward direction at corners, one elsewhere
    # on the perimeter (pointing away from the lattice).
    for i in range(n):
        for j in range(n):
            directions = []
            if i == 0:
                directions.append(("w", -L, 0.0))
            if i == n - 1:
                directions.append(("e", L, 0.0))
            if j == 0:
                directions.append(("s", 0.0, -L))
            if j == n - 1:
                directions.append(("n", 0.0, L))
            # corners naturally get two outward stubs, other perimeter nodes one
            for d, dx, dy in directions:
                jid = f"J{i}{j}"
                ext = f"X{i}{j}{d}"
                x, y = net.node_xy(jid)
                net.add_node(Node(ext, x + dx, y + dy))
                net.add_edge(Edge(f"in_{i}{j}{d}", ext, jid, L, speed_limit, is_external=True))
                net.add_edge(Edge(f"out_{i}{j}{d}", jid, ext, L, speed_limit, is_external=True))
    _assign_zones(net, n, L)
    return net


def _assign_zones(net: RoadNetwork, n: int, L: float) -> None:
    lo, hi = 0.0, (n - 1) * L
    for z in range(9):
        net.zones[z] = Zone(z)
    for eid in sorted(net.edges):
        e = net.edges[eid]
        if not e.is_external:
            continue
        jid = e.to if e.to in net.nodes and not e.to.startswith("X") else e.frm
        x, y = net.node_xy(jid)
        zid = _zone_index(y, lo, hi) * 3 + _zone_index(x, lo, hi)
        if e.frm.startswith("X"):
            net.zones[zid].entry_edges.append(eid)
        else:
            net.zones[zid].exit_edges.append(eid)
    # center zone (id 4) has no stubs; it uses the internal edges bounding
    # the center tile, i.e. the links among the innermost junctions.
    center = net.zones[4]
    inner = {f"J{i}{j}" for i in range(1, n - 1) for j in range(1, n - 1)}
    for eid in sorted(net.edges):
        e = net.edges[eid]
        if e.frm in inner and e.to in inner:
            center.entry_edges.append(eid)
            center.exit_edges.append(eid)


def undirected_edge_count(net: RoadNetwork) -> int:
    seen = set()
    for e in net.edges.values():
        seen.add(frozenset((e.frm, e.to)))
    return len(seen)


def fastest_path(
    net: RoadNetwork,
    origin_edge: str,
    dest_edge: str,
    edge_cost: Callable[[str], float],
) -> Route:
    """Route minimizing the sum of current edge travel-time estimates.

    Dijkstra over the edge-adjacency graph; equal-cost ties break by
    lexicographic edge id so routing is deterministic.
    """
    if origin_edge not in net.edges or dest_edge not in net.edges:
        raise NetworkError("origin or destination edge does not exist")
    if origin_edge == dest_edge:
        return Route((origin_edge,))
    best: dict[str, float] = {origin_edge: edge_cost(origin_edge)}
    parent: dict[str, str | None] = {origin_edge: None}
    heap: list[tuple[float, str]] = [(best[origin_edge], origin_edge)]
    while heap:
        cost, eid = heapq.heappop(heap)
        if cost > best.get(eid, math.inf):
            continue
        if eid == dest_edge:
            path = []
            cur: str | None = eid
            while cur is not None:
                path.append(cur)
                cur = parent[cur]
            return Route(tuple(reversed(path)))
        junction = net.edges[eid].to
        for nxt in sorted(net.outgoing[junction]):
            c = cost + edge_cost(nxt)
            if c < best.get(nxt, math.inf):
                best[nxt] = c
                parent[nxt] = eid
                heapq.heappush(heap, (c, nxt))
    raise NetworkError(f"no route from {origin_edge} to {dest_edge}")
