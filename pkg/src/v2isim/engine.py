"""Deterministic discrete-event kernel.

Simulation time is an integer count of milliseconds, so every configured
duration is exactly representable and two runs with the same seed replay
bit-identically on any platform.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from typing import Callable

# Time unit helpers: all simulation times are int milliseconds.
MS = 1
SECOND = 1000


def ms_from_s(seconds: float) -> int:
    """Convert a duration in seconds to integer milliseconds."""
    return round(seconds * SECOND)


class SchedulingError(Exception):
    """Raised when an event is scheduled in the past (a simulator bug)."""


class EventHandle:
    """Permits cancellation of a scheduled event."""

    __slots__ = ("cancelled", "time", "kind")

    def __init__(self, time: int, kind: str):
        self.cancelled = False
        self.time = time
        self.kind = kind

    def cancel(self) -> None:
        self.cancelled = True


class Simulator:
    """Single-threaded event loop with a (fire_time, insertion-order) total order.

    Ties in fire time resolve by insertion order; the observed clock never
    decreases.
    """

    def __init__(self, record_log: bool = False):
        self.now: int = 0
        self._heap: list[tuple[int, int, EventHandle, Callable[[], None]]] = []
        self._seq = 0
        self.processed = 0
        self.event_log: list[tuple[int, int, str]] | None = [] if record_log else None

    def schedule_at(self, time: int, kind: str, callback: Callable[[], None]) -> EventHandle:
        if time < self.now:
            raise SchedulingError(f"event {kind!r} scheduled at {time} ms, clock is {self.now} ms")
        handle = EventHandle(time, kind)
        heapq.heappush(self._heap, (time, self._seq, handle, callback))
        self._seq += 1
        return handle

    def schedule_in(self, delay: int, kind: str, callback: Callable[[], None]) -> EventHandle:
        return self.schedule_at(self.now + delay, kind, callback)

    def run_until(self, t_end: int) -> int:
        """Process every event with fire_time <= t_end; leave the clock at t_end."""
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) with clock at {self.now}")
        heap = self._heap
        count = 0
        while heap and heap[0][0] <= t_end:
            time, seq, handle, callback = heapq.heappop(heap)
            if handle.cancelled:
                continue
            self.now = time
            if self.event_log is not None:
                self.event_log.append((time, seq, handle.kind))
            callback()
            count += 1
        self.now = t_end
        self.processed += count
        return count


def _stream_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class RngStreams:
    """Named, independently seeded random streams.

    Each consumer (demand, traffic dawdling, channel loss, ...) owns a
    stream, so adding a consumer never perturbs another's draw sequence.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, random.Random] = {}

    def stream(self, label: str) -> random.Random:
        rng = self._streams.get(label)
        if rng is None:
            rng = random.Random(_stream_seed(self.seed, label))
            self._streams[label] = rng
        return rng
