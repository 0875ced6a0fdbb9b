"""Abstract V2I communication.

Radio reach comes from a free-space link budget (overridable). Beacons are
fire-and-forget datagrams; vehicle-IA streams are reliable and ordered,
with loss modeled as retransmission delay. Per-message delay grows with
the number of connections active at the IA, which reproduces the
load-delay coupling seen around a busy RSU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .engine import Simulator

SPEED_OF_LIGHT = 299_792_458.0


class CommError(Exception):
    pass


@dataclass
class RadioConfig:
    tx_power_mw: float = 1.0
    sensitivity_dbm: float = -89.0
    carrier_frequency_hz: float = 5.890e9
    range_override_m: float | None = None


def derive_range(cfg: RadioConfig) -> float:
    """Distance at which free-space path loss consumes the link budget."""
    if cfg.range_override_m is not None:
        if cfg.range_override_m <= 0:
            raise CommError("range override must be positive")
        return cfg.range_override_m
    if cfg.tx_power_mw <= 0:
        raise CommError("tx_power must be positive")
    budget_db = 10.0 * math.log10(cfg.tx_power_mw) - cfg.sensitivity_dbm
    if budget_db <= 0:
        raise CommError("non-positive link budget")
    log_d = (budget_db
             - 20.0 * math.log10(cfg.carrier_frequency_hz)
             - 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)) / 20.0
    return 10.0 ** log_d


@dataclass
class ChannelModel:
    base_delay_ms: int = 5
    per_node_delay_ms: int = 2
    jitter_ms: int = 2                 # uniform half-width
    loss_probability: float = 0.02
    retransmit_timeout_ms: int = 200
    handshake_rtts: float = 1.5

    def validate(self) -> None:
        if not 0.0 <= self.loss_probability < 1.0:
            raise CommError("loss_probability must be in [0, 1)")
        if self.base_delay_ms <= 0:
            raise CommError("base_delay must be positive")

    @property
    def handshake_legs(self) -> int:
        return round(2.0 * self.handshake_rtts)


@dataclass
class StreamMessage:
    kind: str                  # position-report | election-notice | actuation-request
    sender: str
    receiver: str
    size: int
    send_time: int
    delivery_time: int | None = None
    lost_attempts: int = 0
    payload: dict = field(default_factory=dict)


OPENING = "opening"
ESTABLISHED = "established"
CLOSED = "closed"
ABORTED = "aborted"


class Connection:
    """Reliable ordered stream between one vehicle and one IA."""

    __slots__ = ("id", "vehicle_id", "ia_id", "state", "open_time",
                 "last_delivery", "messages")

    def __init__(self, cid: int, vehicle_id: int, ia_id: str):
        self.id = cid
        self.vehicle_id = vehicle_id
        self.ia_id = ia_id
        self.state = OPENING
        self.open_time: int | None = None
        # last scheduled delivery per direction, to preserve stream order
        self.last_delivery = {"up": 0, "down": 0}
        self.messages: list[StreamMessage] | None = None


@dataclass
class CommStats:
    """Running aggregates so metrics never require the full message log."""

    stream_sent: int = 0
    stream_delivered: int = 0
    sum_delay_ms: int = 0
    bytes_sent: int = 0
    bytes_delivered_at_ia: dict[str, int] = field(default_factory=dict)
    beacons_sent: int = 0
    beacons_delivered: int = 0
    dropped_unknown: int = 0


class CommNetwork:
    def __init__(self, sim: Simulator, channel: ChannelModel, range_m: float,
                 loss_rng, jitter_rng, log_messages: bool = False):
        channel.validate()
        self.sim = sim
        self.channel = channel
        self.range_m = range_m
        self._loss = loss_rng
        self._jitter = jitter_rng
        self._next_conn_id = 1
        self._established_at_ia: dict[str, int] = {}
        self._by_pair: dict[tuple[int, str], Connection] = {}
        self.stats = CommStats()
        self.message_log: list[StreamMessage] | None = [] if log_messages else None

    # -- channel ---------------------------------------------------------

    def active_nodes(self, ia_id: str) -> int:
        return self._established_at_ia.get(ia_id, 0)

    def one_way_delay_ms(self, ia_id: str) -> int:
        ch = self.channel
        delay = ch.base_delay_ms + ch.per_node_delay_ms * self.active_nodes(ia_id)
        if ch.jitter_ms:
            delay += round(self._jitter.uniform(-ch.jitter_ms, ch.jitter_ms))
        return max(delay, 1)

    def _retransmission_count(self) -> int:
        p = self.channel.loss_probability
        if p <= 0.0:
            return 0
        k = 0
        while self._loss.random() < p:
            k += 1
        return k

    # -- beacons (datagram semantics, never retransmitted) ----------------

    def broadcast_beacon(self, ia_id: str, ia_xy: tuple[float, float],
                         receivers) -> int:
        """Deliver the IA's beacon to every (agent, distance) in `receivers`
        that lies within radio range; lossy, fire-and-forget."""
        self.stats.beacons_sent += 1
        delivered = 0
        now = self.sim.now
        for agent, dist in receivers:
            if dist > self.range_m:
                continue
            if self.channel.loss_probability > 0.0 and self._loss.random() < self.channel.loss_probability:
                continue
            delay = self.one_way_delay_ms(ia_id)
            self.sim.schedule_at(now + delay, "beacon-delivery",
                                 lambda a=agent: a.on_beacon(ia_id, ia_xy))
            delivered += 1
        self.stats.beacons_delivered += delivered
        return delivered

    # -- connections -----------------------------------------------------

    def open_connection(self, vehicle_id: int, ia_id: str, still_in_range,
                        on_established, on_aborted=None) -> Connection:
        key = (vehicle_id, ia_id)
        if key in self._by_pair and self._by_pair[key].state in (OPENING, ESTABLISHED):
            raise CommError("already-connected")
        conn = Connection(self._next_conn_id, vehicle_id, ia_id)
        self._next_conn_id += 1
        self._by_pair[key] = conn
        delay = sum(self.one_way_delay_ms(ia_id) for _ in range(self.channel.handshake_legs))

        def finish():
            if conn.state != OPENING:
                return
            if not still_in_range():
                conn.state = ABORTED
                if on_aborted is not None:
                    on_aborted(conn)
                return
            conn.state = ESTABLISHED
            conn.open_time = self.sim.now
            self._established_at_ia[ia_id] = self._established_at_ia.get(ia_id, 0) + 1
            on_established(conn)

        self.sim.schedule_in(delay, "handshake-done", finish)
        return conn

    def send(self, conn: Connection, kind: str, size: int, payload: dict,
             to_ia: bool, deliver) -> StreamMessage:
        """Schedule reliable in-order delivery; loss appears as added delay."""
        if conn.state != ESTABLISHED:
            raise CommError("not-connected")
        now = self.sim.now
        receiver = conn.ia_id if to_ia else f"veh{conn.vehicle_id}"
        sender = f"veh{conn.vehicle_id}" if to_ia else conn.ia_id
        msg = StreamMessage(kind, sender, receiver, size, now, payload=payload)
        retries = self._retransmission_count()
        msg.lost_attempts = retries
        delay = retries * self.channel.retransmit_timeout_ms + self.one_way_delay_ms(conn.ia_id)
        direction = "up" if to_ia else "down"
        delivery = max(now + delay, conn.last_delivery[direction])
        conn.last_delivery[direction] = delivery
        self.stats.stream_sent += 1
        self.stats.bytes_sent += size

        def arrive():
            msg.delivery_time = self.sim.now
            self.stats.stream_delivered += 1
            self.stats.sum_delay_ms += self.sim.now - msg.send_time
            if to_ia:
                acc = self.stats.bytes_delivered_at_ia
                acc[conn.ia_id] = acc.get(conn.ia_id, 0) + size
            if self.message_log is not None:
                self.message_log.append(msg)
            deliver(msg, conn)

        self.sim.schedule_at(delivery, "message-delivery", arrive)
        return msg

    def close(self, conn: Connection) -> None:
        if conn.state == CLOSED:
            return
        if conn.state == ESTABLISHED:
            self._established_at_ia[conn.ia_id] -= 1
        conn.state = CLOSED

    def connection(self, vehicle_id: int, ia_id: str) -> Connection | None:
        return self._by_pair.get((vehicle_id, ia_id))
