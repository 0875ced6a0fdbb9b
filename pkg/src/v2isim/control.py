"""RSU-side and vehicle-side control agents.

The IA keeps a per-vehicle map fed by position reports, elects a lead
vehicle when the map is fresh, and lets the elected vehicle request a
favorable signal phase, gated by minimum and maximum state durations.
Unequipped junctions run the open-loop fixed cycle; an equipped junction
with no connected vehicles degrades to exactly the same behavior through
the max-duration auto switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .comms import CommNetwork, Connection, ESTABLISHED, OPENING
from .engine import Simulator
from .signals import GREEN, PHASE_A, PHASE_B, TrafficLight
from .traffic import TrafficModel, Vehicle

APPROACHING = "approaching"
LEAVING = "leaving"


class ConfigError(Exception):
    pass


@dataclass
class ControlConfig:
    election_interval_ms: int = 500
    position_send_interval_ms: int = 500
    broadcast_interval_ms: int = 500
    cycle_duration_ms: int = 90_000
    max_state_duration_ms: int = 45_000
    min_state_duration_ms: int = 8_000
    map_module_timeout_ms: int = 2_000
    map_module_length_ms: int = 5_000
    d_min: float = 100.0
    alpha: float = 2.0
    payload_bytes: int = 30
    connection_trigger_m: float = 114.0
    disconnect_distance_m: float = 50.0
    yellow_ms: int = 3_000

    def validate(self) -> None:
        if self.d_min <= 0:
            raise ConfigError("d_min must be > 0")
        if self.alpha <= 1:
            raise ConfigError("alpha must be > 1")
        if self.min_state_duration_ms > self.max_state_duration_ms:
            raise ConfigError("min_state_duration exceeds max_state_duration")


@dataclass
class MapEntry:
    """One connected vehicle as the IA sees it."""

    vehicle_id: int
    conn_id: int
    trajectory: list[tuple[int, float, float]] = field(default_factory=list)
    fst: int = 0            # first-received time
    lst: int = 0            # last-received time (the report's send timestamp)
    r: float = 0.0          # distance to the junction
    cos_theta: float = 1.0
    sin_theta: float = 0.0
    state: str = APPROACHING
    edge_id: str | None = None


class JunctionMap:
    def __init__(self, ia_id: str, junction_xy: tuple[float, float]):
        self.ia_id = ia_id
        self.junction_xy = junction_xy
        self.entries: dict[int, MapEntry] = {}

    def update(self, vehicle_id: int, conn_id: int, send_time: int,
               x: float, y: float, edge_id: str | None = None) -> MapEntry:
        jx, jy = self.junction_xy
        dx, dy = x - jx, y - jy
        r = math.hypot(dx, dy)
        entry = self.entries.get(vehicle_id)
        if entry is None:
            entry = MapEntry(vehicle_id, conn_id, fst=send_time)
            self.entries[vehicle_id] = entry
        prev_r = entry.r if entry.trajectory else None
        entry.conn_id = conn_id
        entry.trajectory.append((send_time, x, y))
        entry.lst = send_time
        entry.r = r
        if r > 0:
            entry.cos_theta = dx / r
            entry.sin_theta = dy / r
        entry.edge_id = edge_id
        # radius trend over the last two samples; first contact counts as approaching
        entry.state = APPROACHING if prev_r is None or r < prev_r else LEAVING
        return entry

    def purge(self, now: int, map_module_length_ms: int) -> None:
        stale = [vid for vid, e in self.entries.items()
                 if now - e.lst > map_module_length_ms]
        for vid in stale:
            del self.entries[vid]
        cutoff = now - map_module_length_ms
        for e in self.entries.values():
            if e.trajectory and e.trajectory[0][0] < cutoff:
                e.trajectory = [s for s in e.trajectory if s[0] >= cutoff]

    def is_synchronized(self, now: int, map_module_timeout_ms: int) -> bool:
        return all(now - e.lst <= map_module_timeout_ms for e in self.entries.values())


def priority_phase(now_ms: int, cycle_duration_ms: int) -> str:
    """Incoming-edge priorities alternate every half cycle, starting on A."""
    return PHASE_A if (now_ms // (cycle_duration_ms // 2)) % 2 == 0 else PHASE_B


def elect(p, v, d_p: float | None, d_v: float | None,
          d_min: float, alpha: float):
    """Pick between the prioritized-group lead p and the other-group lead v.

    v wins only when it is close to the junction (d_v < d_min) and p is
    either absent or still far away (d_p > alpha * d_min); otherwise the
    prioritized lead (possibly None) is returned.
    """
    if (p is not None and v is not None and d_p > alpha * d_min and d_v < d_min) or \
       (p is None and v is not None and d_v < d_min):
        return v
    return p


def lead_vehicles(jmap: JunctionMap, light: TrafficLight, prioritized: str):
    """Nearest approaching mapped vehicle of each phase group.

    Returns ((p, d_p), (v, d_v)) for the prioritized and other group; a
    missing lead is (None, None). Ties on distance break on vehicle id.
    """
    best: dict[str, tuple[float, int]] = {}
    for vid in sorted(jmap.entries):
        e = jmap.entries[vid]
        if e.state != APPROACHING or e.edge_id is None:
            continue
        group = light.group_of(e.edge_id)
        if group is None:
            continue
        cur = best.get(group)
        if cur is None or (e.r, vid) < cur:
            best[group] = (e.r, vid)
    other = PHASE_B if prioritized == PHASE_A else PHASE_A
    p = best.get(prioritized)
    v = best.get(other)
    return ((p[1], p[0]) if p else (None, None)), ((v[1], v[0]) if v else (None, None))


class FixedCycleController:
    """Open-loop cyclic program: commit a phase change every half cycle."""

    def __init__(self, sim: Simulator, light: TrafficLight, cfg: ControlConfig,
                 cause: str = "fixed-cycle"):
        self.sim = sim
        self.light = light
        self.cfg = cfg
        self.cause = cause

    def start(self) -> None:
        self.sim.schedule_at(self.cfg.max_state_duration_ms, "tls-auto-switch", self._switch)

    def _switch(self) -> None:
        ok, _ = self.light.request_switch(self.light.other_phase(), self.sim.now, self.cause)
        if ok:
            self.sim.schedule_in(self.cfg.yellow_ms, "yellow-end", self.light.finish_yellow)
        self.sim.schedule_in(self.cfg.max_state_duration_ms, "tls-auto-switch", self._switch)


class IaAgent:
    """Intersection agent: beacons, junction map, election and actuation."""

    def __init__(self, ia_id: str, junction_xy: tuple[float, float],
                 light: TrafficLight, sim: Simulator, comms: CommNetwork,
                 cfg: ControlConfig, neighbor_provider, agent_lookup=None):
        cfg.validate()
        self.id = ia_id
        self.xy = junction_xy
        self.light = light
        self.sim = sim
        self.comms = comms
        self.cfg = cfg
        self.map = JunctionMap(ia_id, junction_xy)
        self._neighbors = neighbor_provider     # (ia) -> iterable of (VaAgent, distance)
        self._agent_lookup = agent_lookup       # vehicle id -> VaAgent or None
        self._auto_generation = 0
        self.suppressed: dict[str, int] = {}
        self.dropped_unmapped = 0

    def start(self) -> None:
        self.sim.schedule_in(self.cfg.broadcast_interval_ms, "beacon", self._beacon_tick)
        self.sim.schedule_in(self.cfg.election_interval_ms, "election-timer", self._election_tick)
        self._arm_auto_switch(self.light.last_switch_time)

    # -- beaconing --------------------------------------------------------

    def _beacon_tick(self) -> None:
        self.comms.broadcast_beacon(self.id, self.xy, self._neighbors(self))
        self.sim.schedule_in(self.cfg.broadcast_interval_ms, "beacon", self._beacon_tick)

    # -- map and election --------------------------------------------------

    def on_message(self, msg, conn: Connection) -> None:
        if msg.kind == "position-report":
            if conn.state != ESTABLISHED:
                self.comms.stats.dropped_unknown += 1
                return
            self.map.update(conn.vehicle_id, conn.id, msg.payload["t"],
                            msg.payload["x"], msg.payload["y"], msg.payload.get("edge"))
        elif msg.kind == "actuation-request":
            self.handle_actuation(conn.vehicle_id, msg.payload.get("edge"))

    def _election_tick(self) -> None:
        self.sim.schedule_in(self.cfg.election_interval_ms, "election-timer", self._election_tick)
        now = self.sim.now
        self.map.purge(now, self.cfg.map_module_length_ms)
        if not self.map.is_synchronized(now, self.cfg.map_module_timeout_ms):
            return
        prioritized = priority_phase(now, self.cfg.cycle_duration_ms)
        (p, d_p), (v, d_v) = lead_vehicles(self.map, self.light, prioritized)
        elected = elect(p, v, d_p, d_v, self.cfg.d_min, self.cfg.alpha)
        if elected is None:
            return
        entry = self.map.entries[elected]
        conn = self.comms.connection(elected, self.id)
        if conn is None or conn.state != ESTABLISHED:
            return
        agent = self._agent_for(elected)
        if agent is None:
            return
        self.comms.send(conn, "election-notice", self.cfg.payload_bytes,
                        {"junction": self.id}, to_ia=False,
                        deliver=lambda m, c: agent.on_message(m, c))

    def _agent_for(self, vehicle_id: int):
        if self._agent_lookup is not None:
            return self._agent_lookup(vehicle_id)
        for agent, _dist in self._neighbors(self):
            if agent.vehicle.id == vehicle_id:
                return agent
        return None

    # -- actuation ----------------------------------------------------------

    def handle_actuation(self, vehicle_id: int, edge_id: str | None) -> tuple[bool, str]:
        now = self.sim.now
        if vehicle_id not in self.map.entries:
            self.dropped_unmapped += 1
            return False, "unmapped"
        group = self.light.group_of(edge_id) if edge_id else None
        if group is None:
            self.dropped_unmapped += 1
            return False, "unknown-edge"
        if self.light.in_yellow:
            return self._suppress("in-transition")
        if self.light.color_for_group(group) == GREEN:
            return self._suppress("already-green")
        if now - self.light.last_switch_time < self.cfg.min_state_duration_ms:
            return self._suppress("min-duration")
        ok, reason = self.light.request_switch(group, now, "actuation")
        if not ok:
            return self._suppress(reason)
        self.sim.schedule_in(self.cfg.yellow_ms, "yellow-end", self.light.finish_yellow)
        self._arm_auto_switch(now)
        return True, "committed"

    def _suppress(self, reason: str) -> tuple[bool, str]:
        self.suppressed[reason] = self.suppressed.get(reason, 0) + 1
        return False, reason

    # -- cyclic fallback ------------------------------------------------------

    def _arm_auto_switch(self, committed_at: int) -> None:
        self._auto_generation += 1
        gen = self._auto_generation
        self.sim.schedule_at(committed_at + self.cfg.max_state_duration_ms,
                             "tls-auto-switch", lambda: self._auto_switch(gen))

    def _auto_switch(self, generation: int) -> None:
        if generation != self._auto_generation:
            return  # superseded by a committed actuation
        now = self.sim.now
        ok, _ = self.light.request_switch(self.light.other_phase(), now, "auto")
        if ok:
            self.sim.schedule_in(self.cfg.yellow_ms, "yellow-end", self.light.finish_yellow)
        self._arm_auto_switch(now)


class VaAgent:
    """Vehicle agent: IA map from beacons, closest-approaching-IA election,
    connect / report / disconnect lifecycle along the route."""

    def __init__(self, vehicle: Vehicle, sim: Simulator, comms: CommNetwork,
                 traffic: TrafficModel, cfg: ControlConfig,
                 ia_registry: dict[str, IaAgent] | None = None):
        self.vehicle = vehicle
        self.sim = sim
        self.comms = comms
        self.traffic = traffic
        self.cfg = cfg
        self._ia_registry = ia_registry if ia_registry is not None else {}
        self.ia_map: dict[str, tuple[float, float, int]] = {}  # ia -> (x, y, last beacon)
        self.elected_ia: str | None = None
        self.conn: Connection | None = None
        self.alive = True

    def start(self) -> None:
        self.sim.schedule_in(self.cfg.position_send_interval_ms, "va-tick", self.tick)

    def on_beacon(self, ia_id: str, ia_xy: tuple[float, float]) -> None:
        if self.alive:
            self.ia_map[ia_id] = (ia_xy[0], ia_xy[1], self.sim.now)

    def relative_ia_position(self, ia_id: str) -> tuple[float, float] | None:
        """IA coordinates relative to the vehicle's current position."""
        entry = self.ia_map.get(ia_id)
        if entry is None:
            return None
        vx, vy = self.traffic.vehicle_xy(self.vehicle)
        return entry[0] - vx, entry[1] - vy

    # -- route geometry (GPS + local map, no communication) -----------------

    def _junction_node_of(self, ia_id: str) -> str:
        return ia_id  # IA ids are junction node ids

    def distance_ahead(self, junction_id: str) -> float | None:
        """Remaining route distance to the junction, None if not ahead."""
        veh = self.vehicle
        net = self.traffic.net
        dist = net.edges[veh.edge_id].length - veh.pos
        if net.edges[veh.edge_id].to == junction_id:
            return dist
        for idx in range(veh.edge_idx + 1, len(veh.route)):
            edge = net.edges[veh.route[idx]]
            dist += edge.length
            if edge.to == junction_id:
                return dist
        return None

    def distance_behind(self, junction_id: str) -> float | None:
        """Distance traveled past the junction, None if not behind."""
        veh = self.vehicle
        net = self.traffic.net
        dist = veh.pos
        if net.edges[veh.edge_id].frm == junction_id:
            return dist
        for idx in range(veh.edge_idx - 1, -1, -1):
            edge = net.edges[veh.route[idx]]
            dist += edge.length
            if edge.frm == junction_id:
                return dist
        return None

    # -- lifecycle ----------------------------------------------------------

    def tick(self) -> None:
        if not self.alive:
            return
        now = self.sim.now
        self.sim.schedule_in(self.cfg.position_send_interval_ms, "va-tick", self.tick)
        # purge stale IA-map entries
        cutoff = now - self.cfg.map_module_length_ms
        for ia_id in [i for i, e in self.ia_map.items() if e[2] < cutoff]:
            del self.ia_map[ia_id]
        if self.conn is not None and self.conn.state == ESTABLISHED:
            self._connected_tick(now)
        elif self.conn is None or self.conn.state not in (OPENING,):
            self._search_tick()

    def _connected_tick(self, now: int) -> None:
        behind = self.distance_behind(self.elected_ia)
        if behind is not None and behind >= self.cfg.disconnect_distance_m:
            self.disconnect()
            return
        if self.distance_ahead(self.elected_ia) is None and behind is None:
            # junction no longer on the route history window; drop the link
            self.disconnect()
            return
        x, y = self.traffic.vehicle_xy(self.vehicle)
        self.comms.send(self.conn, "position-report", self.cfg.payload_bytes,
                        {"t": now, "x": x, "y": y, "edge": self.vehicle.edge_id},
                        to_ia=True, deliver=self._deliver_to_ia)

    def _deliver_to_ia(self, msg, conn: Connection) -> None:
        ia = self._ia_registry[conn.ia_id]
        ia.on_message(msg, conn)

    def _search_tick(self) -> None:
        # elect the closest IA the vehicle is approaching along its route
        best: tuple[float, str] | None = None
        for ia_id in sorted(self.ia_map):
            ahead = self.distance_ahead(ia_id)
            if ahead is None:
                continue
            if best is None or (ahead, ia_id) < best:
                best = (ahead, ia_id)
        if best is None:
            self.elected_ia = None
            return
        dist, ia_id = best
        self.elected_ia = ia_id
        if dist <= self.cfg.connection_trigger_m:
            self._open(ia_id)

    def _open(self, ia_id: str) -> None:
        def still_in_range() -> bool:
            if not self.alive:
                return False
            vx, vy = self.traffic.vehicle_xy(self.vehicle)
            ix, iy, _ = self.ia_map.get(ia_id, (0.0, 0.0, -1))
            return ia_id in self.ia_map and \
                math.hypot(ix - vx, iy - vy) <= self.comms.range_m

        def established(conn: Connection) -> None:
            self.conn = conn

        def aborted(conn: Connection) -> None:
            if self.conn is conn:
                self.conn = None

        self.conn = self.comms.open_connection(self.vehicle.id, ia_id,
                                               still_in_range, established, aborted)

    def on_message(self, msg, conn: Connection) -> None:
        if msg.kind != "election-notice" or not self.alive:
            return
        if self.conn is None or self.conn.state != ESTABLISHED:
            return
        # respond by requesting green for the edge the vehicle is on
        self.comms.send(self.conn, "actuation-request", self.cfg.payload_bytes,
                        {"edge": self.vehicle.edge_id}, to_ia=True,
                        deliver=self._deliver_to_ia)

    def disconnect(self) -> None:
        if self.conn is not None:
            self.comms.close(self.conn)
            self.conn = None
        self.elected_ia = None

    def shutdown(self) -> None:
        self.alive = False
        self.disconnect()
