"""Two-phase traffic light with yellow transitions and a switch log.

The light itself only sequences colors; min/max duration gating and the
choice of controller (fixed cycle vs RSU actuation) live in the control
layer.
"""

from __future__ import annotations

from dataclasses import dataclass

GREEN = "green"
YELLOW = "yellow"
RED = "red"

PHASE_A = "A"  # north-south approaches green
PHASE_B = "B"  # east-west approaches green


@dataclass
class SwitchRecord:
    time: int  # commitment instant, ms
    junction: str
    new_phase: str
    cause: str  # actuation | auto | fixed-cycle


class TrafficLight:
    """Signal head for one junction: two antagonistic edge groups, never
    simultaneously green; every switch passes through a yellow interval for
    the losing group."""

    def __init__(self, junction_id: str, group_a: list[str], group_b: list[str],
                 yellow_ms: int, initial_phase: str = PHASE_A):
        self.junction_id = junction_id
        self.groups = {PHASE_A: list(group_a), PHASE_B: list(group_b)}
        self.yellow_ms = yellow_ms
        self.phase = initial_phase  # group currently (or about to stop) holding green
        self.pending_phase: str | None = None
        self.in_yellow = False
        self.yellow_end = 0
        self.last_switch_time = 0
        self.switch_log: list[SwitchRecord] = []
        self._edge_group = {}
        for phase, edges in self.groups.items():
            for eid in edges:
                self._edge_group[eid] = phase

    def group_of(self, edge_id: str) -> str | None:
        return self._edge_group.get(edge_id)

    def color_for_group(self, group: str) -> str:
        if self.in_yellow:
            return YELLOW if group == self.phase else RED
        return GREEN if group == self.phase else RED

    def color_for_edge(self, edge_id: str) -> str:
        group = self._edge_group.get(edge_id)
        if group is None:
            return GREEN  # edge not controlled by this light
        return self.color_for_group(group)

    def request_switch(self, target_phase: str, now: int, cause: str) -> tuple[bool, str]:
        """Commit a phase change: the losing group turns yellow now, the
        winning group turns green at yellow end (via finish_yellow)."""
        if self.in_yellow:
            return False, "in-transition"
        if target_phase == self.phase:
            return False, "already-set"
        self.in_yellow = True
        self.pending_phase = target_phase
        self.yellow_end = now + self.yellow_ms
        self.last_switch_time = now
        self.switch_log.append(SwitchRecord(now, self.junction_id, target_phase, cause))
        return True, "committed"

    def finish_yellow(self) -> None:
        assert self.in_yellow and self.pending_phase is not None
        self.phase = self.pending_phase
        self.pending_phase = None
        self.in_yellow = False

    def other_phase(self) -> str:
        return PHASE_B if self.phase == PHASE_A else PHASE_A

    def any_green_conflict(self) -> bool:
        """True if both groups show green (must never happen)."""
        return self.color_for_group(PHASE_A) == GREEN and self.color_for_group(PHASE_B) == GREEN
