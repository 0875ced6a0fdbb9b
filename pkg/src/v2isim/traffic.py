"""Microscopic vehicle dynamics on one-lane edges.

Krauss-style safe-speed car following, signal compliance (a red or yellow
light acts as a stationary leader at the stop line), junction transit and
arrival accounting. A simulation step advances every vehicle once.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .roadnet import RoadNetwork, Route
from .signals import GREEN, RED, YELLOW, TrafficLight


@dataclass
class CarFollowingParams:
    max_accel: float = 2.6      # m/s^2
    max_decel: float = 4.5      # m/s^2
    min_gap: float = 2.5        # m, bumper-to-bumper at standstill
    vehicle_length: float = 5.0  # m
    sigma: float = 0.5          # driver imperfection in [0, 1]
    tau: float = 1.0            # s, driver reaction headway
    turn_speed: float = 5.0     # m/s cap while crossing onto a turning edge

    def validate(self) -> None:
        if min(self.max_accel, self.max_decel, self.min_gap,
               self.vehicle_length, self.tau, self.turn_speed) <= 0:
            raise ValueError("car-following parameters must be positive")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError("sigma must be in [0, 1]")


@dataclass
class DemandFlow:
    """One demand flow: either a rate (veh/lane/hour) or a fixed count of
    vehicles spread uniformly over the active interval."""

    origin_edge: str
    dest_edge: str
    start_ms: int
    end_ms: int
    rate_per_hour: float | None = None
    count: int | None = None
    equipped_ratio: float = 0.0

    def insertion_times(self) -> list[int]:
        if self.count is not None:
            if self.count <= 0:
                return []
            interval = (self.end_ms - self.start_ms) / self.count
            return [self.start_ms + round(i * interval) for i in range(self.count)]
        if not self.rate_per_hour:
            return []
        interval_ms = 3_600_000.0 / self.rate_per_hour
        times = []
        t = float(self.start_ms)
        while t < self.end_ms:
            times.append(round(t))
            t += interval_ms
        return times


class Vehicle:
    __slots__ = ("id", "route", "edge_idx", "pos", "speed", "length", "equipped",
                 "insert_time", "end_time", "agent", "stamp")

    def __init__(self, vid: int, route: Route, length: float, equipped: bool):
        self.id = vid
        self.route = route.edges
        self.edge_idx = 0
        self.pos = 0.0      # front bumper, meters from edge start
        self.speed = 0.0
        self.length = length
        self.equipped = equipped
        self.insert_time: int | None = None
        self.end_time: int | None = None
        self.agent = None   # control-layer VA, attached on insertion
        self.stamp = 0      # last traffic step that moved this vehicle

    @property
    def edge_id(self) -> str:
        return self.route[self.edge_idx]


@dataclass
class TrafficCensus:
    inserted: int = 0
    ended: int = 0
    running: int = 0
    queued: int = 0


class TrafficModel:
    """Owns every vehicle on the network and advances them step by step."""

    def __init__(self, net: RoadNetwork, lights: dict[str, TrafficLight],
                 params: CarFollowingParams, dawdle_rng):
        params.validate()
        self.net = net
        self.lights = lights
        self.params = params
        self._rng = dawdle_rng
        # per-edge vehicle lists ordered front (largest pos) to back
        self.edge_vehicles: dict[str, list[Vehicle]] = {eid: [] for eid in sorted(net.edges)}
        self.entry_queues: dict[str, deque[Vehicle]] = {}
        self.census = TrafficCensus()
        self.ended_vehicles: list[Vehicle] = []
        self.on_inserted: list[Callable[[Vehicle, int], None]] = []
        self.on_ended: list[Callable[[Vehicle, int], None]] = []
        self.safety_violations = 0
        self._step_stamp = 0
        # stop lights controlling each edge, resolved once
        self._edge_light: dict[str, TrafficLight | None] = {}
        for eid in self.edge_vehicles:
            light = lights.get(net.edges[eid].to)
            if light is not None and light.group_of(eid) is None:
                light = None
            self._edge_light[eid] = light
        # whether moving from one edge to the next changes heading (a turn)
        self._is_turn: dict[str, dict[str, bool]] = {}
        for eid, edge in net.edges.items():
            hx, hy = net.edge_heading(eid)
            succ = {}
            for oid in net.outgoing.get(edge.to, ()):
                ox, oy = net.edge_heading(oid)
                succ[oid] = hx * ox + hy * oy < 0.9
            self._is_turn[eid] = succ

    # -- insertion -------------------------------------------------------

    def request_insert(self, vehicle: Vehicle, now: int) -> None:
        """Place the vehicle at its origin edge entry, or queue it there
        until the entry cell is free (retried every traffic step)."""
        if not self._try_place(vehicle, now):
            self.entry_queues.setdefault(vehicle.route[0], deque()).append(vehicle)
            self.census.queued += 1

    def _try_place(self, vehicle: Vehicle, now: int) -> bool:
        eid = vehicle.route[0]
        edge = self.net.edges[eid]
        vehicles = self.edge_vehicles[eid]
        front = self.params.vehicle_length
        if vehicles:
            last = vehicles[-1]
            if last.pos - last.length - self.params.min_gap < front:
                return False
        vehicle.pos = front
        vehicle.speed = 0.0
        vehicle.insert_time = now
        vehicles.append(vehicle)
        self.census.inserted += 1
        self.census.running += 1
        for cb in self.on_inserted:
            cb(vehicle, now)
        return True

    # -- observation -----------------------------------------------------

    def mean_speed(self, edge_id: str) -> float:
        """Instantaneous arithmetic mean speed; free-flow if the edge is empty."""
        vehicles = self.edge_vehicles[edge_id]
        if not vehicles:
            return self.net.edges[edge_id].speed_limit
        return sum(v.speed for v in vehicles) / len(vehicles)

    def travel_time_estimate(self, edge_id: str) -> float:
        """Edge length over current harmonic-mean speed (free-flow if empty);
        stopped vehicles are floored at 0.1 m/s to keep the estimate finite."""
        edge = self.net.edges[edge_id]
        vehicles = self.edge_vehicles[edge_id]
        if not vehicles:
            return edge.length / edge.speed_limit
        inv = sum(1.0 / max(v.speed, 0.1) for v in vehicles)
        return edge.length / (len(vehicles) / inv)

    def vehicle_xy(self, vehicle: Vehicle) -> tuple[float, float]:
        return self.net.position_xy(vehicle.edge_id, vehicle.pos)

    # -- dynamics --------------------------------------------------------

    def step(self, now: int, dt: float) -> None:
        p = self.params
        a, b, mg, tau = p.max_accel, p.max_decel, p.min_gap, p.tau
        # imperfection acts once per reaction interval, not once per step
        dawdle = p.sigma * a * tau
        steps_per_tau = max(1, round(tau / dt))
        vt = p.turn_speed
        inv_2b = 1.0 / (2.0 * b)
        rnd = self._rng.random
        net_edges = self.net.edges
        self._step_stamp += 1
        stamp = self._step_stamp

        for light in self.lights.values():
            if light.any_green_conflict():
                self.safety_violations += 1

        for eid, vehicles in self.edge_vehicles.items():
            if not vehicles:
                continue
            edge = net_edges[eid]
            L = edge.length
            vmax = edge.speed_limit
            light = self._edge_light[eid]
            color = light.color_for_edge(eid) if light is not None else GREEN
            lead: Vehicle | None = None
            left_edge = False
            for veh in vehicles:
                if veh.stamp == stamp:
                    lead = veh  # already moved this step (came from upstream)
                    continue
                veh.stamp = stamp
                v = veh.speed
                if lead is None:
                    vsafe = vmax
                    on_last_edge = veh.edge_idx == len(veh.route) - 1
                    if not on_last_edge:
                        dist = L - veh.pos
                        if color != GREEN:
                            # yellow: a vehicle that can no longer stop is committed
                            committed = color == YELLOW and v * v > 2.0 * b * dist
                            if not committed:
                                # stationary virtual leader at the stop line
                                vsafe = max(0.0, dist / (v * inv_2b + tau))
                        if vsafe > vt and self._is_turn[eid][veh.route[veh.edge_idx + 1]]:
                            # brake towards the turning speed at the stop line
                            vlim = math.sqrt(vt * vt + 2.0 * b * max(dist, 0.0))
                            if vlim < vsafe:
                                vsafe = vlim
                else:
                    gap = lead.pos - lead.length - veh.pos - mg
                    vl = lead.speed
                    vsafe = vl + (gap - vl * tau) / ((v + vl) * inv_2b + tau)
                    if vsafe < 0.0:
                        vsafe = 0.0
                vnew = v + a * dt
                if vnew > vmax:
                    vnew = vmax
                if vnew > vsafe:
                    vnew = vsafe
                if (stamp + veh.id) % steps_per_tau == 0:
                    vnew -= dawdle * rnd()
                if vnew < 0.0:
                    vnew = 0.0
                pos = veh.pos + vnew * dt
                if lead is not None:
                    limit = lead.pos - lead.length - mg
                    if pos > limit:
                        pos = limit if limit > veh.pos else veh.pos
                        vnew = (pos - veh.pos) / dt
                elif pos > L:
                    if self._handle_edge_end(veh, pos, vnew, now, color):
                        left_edge = True  # only the edge leader can leave per step
                        continue
                    pos = L
                    vnew = 0.0
                veh.pos = pos
                veh.speed = vnew
                lead = veh
            if left_edge:
                vehicles.pop(0)
        self._drain_entry_queues(now)

    def _handle_edge_end(self, veh: Vehicle, pos: float, vnew: float,
                         now: int, color: str) -> bool:
        """Vehicle front passed the stop line; end its trip or move it to
        the next route edge. Returns True when it leaves the current edge."""
        L = self.net.edges[veh.edge_id].length
        if veh.edge_idx == len(veh.route) - 1:
            self._end_vehicle(veh, now)
            return True
        if color == RED:
            return False
        nxt = veh.route[veh.edge_idx + 1]
        over = pos - L
        nxt_vehicles = self.edge_vehicles[nxt]
        if nxt_vehicles:
            last = nxt_vehicles[-1]
            if over > last.pos - last.length - self.params.min_gap:
                return False  # spillback: downstream edge entry occupied
        veh.edge_idx += 1
        veh.pos = over
        if self._is_turn[veh.route[veh.edge_idx - 1]][nxt]:
            vnew = min(vnew, self.params.turn_speed)
        veh.speed = vnew
        nxt_vehicles.append(veh)
        return True

    def _end_vehicle(self, veh: Vehicle, now: int) -> None:
        veh.end_time = now
        self.census.running -= 1
        self.census.ended += 1
        self.ended_vehicles.append(veh)
        for cb in self.on_ended:
            cb(veh, now)

    def _drain_entry_queues(self, now: int) -> None:
        for eid in sorted(self.entry_queues):
            queue = self.entry_queues[eid]
            while queue and self._try_place(queue[0], now):
                queue.popleft()
                self.census.queued -= 1
