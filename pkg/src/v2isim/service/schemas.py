"""Request/response models for the HTTP service.

ConfigPatch mirrors ScenarioConfig field for field (types and defaults are
derived from the dataclass, so the two cannot drift apart); every field is
optional and unset fields fall back to the scenario defaults.
"""

from __future__ import annotations

import dataclasses
import typing

from pydantic import BaseModel, ConfigDict, create_model

from ..config import ScenarioConfig
from ..metrics import MetricsReport


def _patch_model() -> type[BaseModel]:
    hints = typing.get_type_hints(ScenarioConfig)
    fields = {}
    for f in dataclasses.fields(ScenarioConfig):
        fields[f.name] = (typing.Optional[hints[f.name]], None)
    return create_model("ConfigPatch", __config__=ConfigDict(extra="forbid"),
                        **fields)


ConfigPatch = _patch_model()


_NULLABLE = {f.name for f in dataclasses.fields(ScenarioConfig)
             if "None" in str(f.type)}


def apply_patch(patch: BaseModel) -> dict:
    """Fields explicitly set on the patch, as ScenarioConfig overrides.

    A null is only meaningful for fields whose default is derived at run
    time (e.g. max_state_duration_s); elsewhere it means "leave alone".
    """
    return {k: v for k, v in patch.model_dump(exclude_unset=True).items()
            if v is not None or k in _NULLABLE}


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigPatch = ConfigPatch()


class SwitchEvent(BaseModel):
    time_ms: int
    junction: str
    new_phase: str
    cause: str


class Report(BaseModel):
    scenario: str
    seed: int
    penetration_rate: float
    equipped_junction_ratio: float
    demand: str
    sim_duration_s: float
    inserted: int
    ended: int
    running: int
    queued: int
    ended_ratio: float | None
    mean_travel_time_s: float | None
    mean_travel_time_equipped_s: float | None
    mean_delay_s: float | None
    rsu_throughput_bps: float
    rsu_throughput_per_ia_bps: dict[str, float]
    app_data_rate_bps: float
    mean_action_interval_s: dict[str, float | None]
    mean_vehicle_speed_ms: float | None
    messages_sent: int
    messages_delivered: int
    safety_violations: int

    @classmethod
    def from_report(cls, report: MetricsReport) -> "Report":
        return cls(**report.to_dict())


class RunResponse(BaseModel):
    report: Report
    csv_header: str
    csv_row: str
    switch_log: list[SwitchEvent]
    processed_events: int
    vehicle_trace: list[tuple] | None = None
    message_count: int | None = None


class JunctionSweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    demands: list[float] = [150.0, 300.0, 600.0, 900.0]
    penetrations: list[float] = [0.0, 0.25, 0.5, 1.0]
    seeds: list[int] = [1, 2, 3]
    workers: int = 1
    config: ConfigPatch = ConfigPatch()


class GridSweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    ratios: list[float] = [0.25, 0.5, 1.0]
    penetrations: list[float] = [0.0, 0.2, 0.5, 0.8]
    seeds: list[int] = list(range(1, 21))
    workers: int = 1
    config: ConfigPatch = ConfigPatch()


class Failure(BaseModel):
    scenario: str
    seed: int
    error: str


class SweepResponse(BaseModel):
    reports: list[Report]
    failures: list[Failure]
    per_run_csv: str
    aggregate_csv: str | None = None


class NetworkEdge(BaseModel):
    id: str
    frm: str
    to: str
    length_m: float
    speed_limit_ms: float


class NetworkResponse(BaseModel):
    kind: str
    junctions: list[str]
    edges: list[NetworkEdge]
    zones: dict[int, list[str]]
    undirected_edge_count: int
