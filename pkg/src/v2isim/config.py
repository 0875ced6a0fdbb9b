"""Scenario configuration: defaults, validation and the key=value file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


class ConfigError(Exception):
    pass


@dataclass
class ScenarioConfig:
    # scenario identity
    scenario: str = "one-junction"         # one-junction | grid
    seed: int = 1
    sim_duration_s: float = 600.0

    # network
    edge_length_m: float = 300.0           # 500 for the grid scenario
    grid_n: int = 4
    speed_limit_ms: float = 13.9

    # demand
    demand_rate_per_hour: float = 600.0    # one-junction: veh/lane/h per approach
    penetration_rate: float = 1.0
    demand_reading: str = "per-pair"       # per-pair | per-origin
    demand_first_center_to_other: int = 10
    demand_first_other_to_center: int = 15
    demand_first_other_to_other: int = 15
    demand_second_center_to_other: int = 10
    demand_second_other_to_center: int = 20
    demand_second_other_to_other: int = 20

    # infrastructure
    equipped_junction_ratio: float = 1.0

    # control timing
    position_send_interval_ms: int = 500
    broadcast_interval_ms: int = 500
    election_interval_ms: int = 500
    cycle_duration_s: float = 90.0
    max_state_duration_s: float | None = None   # defaults to cycle_duration / 2
    min_state_duration_s: float = 8.0
    map_module_timeout_s: float = 2.0
    map_module_length_s: float = 5.0
    d_min_m: float = 100.0
    alpha: float = 2.0
    yellow_s: float = 3.0
    disconnect_distance_m: float = 50.0
    connection_trigger_m: float | None = None   # defaults to radio range

    # radio / channel
    payload_bytes: int = 30
    tx_power_mw: float = 1.0
    sensitivity_dbm: float = -89.0
    carrier_frequency_hz: float = 5.890e9
    radio_range_override_m: float | None = None
    base_delay_ms: int = 5
    per_node_delay_ms: int = 2
    jitter_ms: int = 2
    loss_probability: float = 0.02
    retransmit_timeout_ms: int = 200
    handshake_rtts: float = 1.5

    # car following
    traffic_step_ms: int = 100
    max_accel: float = 2.6
    max_decel: float = 4.5
    min_gap_m: float = 2.5
    vehicle_length_m: float = 5.0
    sigma: float = 0.5
    tau_s: float = 1.0
    turn_speed_ms: float = 5.0

    # tracing
    record_messages: bool = False
    record_vehicle_trace: bool = False
    record_event_log: bool = False
    sample_interval_s: float = 1.0

    def max_state_ms(self) -> int:
        dur = self.max_state_duration_s
        if dur is None:
            dur = self.cycle_duration_s / 2.0
        return round(dur * 1000)

    def validate(self) -> None:
        def domain(cond: bool, key: str, expected: str):
            if not cond:
                raise ConfigError(f"{key}: out of domain, expected {expected}, "
                                  f"got {getattr(self, key)!r}")

        domain(self.scenario in ("one-junction", "grid"), "scenario",
               "one-junction | grid")
        domain(0.0 <= self.penetration_rate <= 1.0, "penetration_rate", "[0, 1]")
        domain(0.0 <= self.equipped_junction_ratio <= 1.0,
               "equipped_junction_ratio", "[0, 1]")
        domain(self.alpha > 1.0, "alpha", "> 1")
        domain(self.d_min_m > 0.0, "d_min_m", "> 0")
        domain(0.0 <= self.loss_probability < 1.0, "loss_probability", "[0, 1)")
        domain(self.sim_duration_s > 0.0, "sim_duration_s", "> 0")
        domain(self.edge_length_m > 0.0, "edge_length_m", "> 0")
        domain(self.grid_n >= 2, "grid_n", ">= 2")
        domain(self.demand_rate_per_hour >= 0.0, "demand_rate_per_hour", ">= 0")
        domain(0.0 <= self.sigma <= 1.0, "sigma", "[0, 1]")
        domain(self.demand_reading in ("per-pair", "per-origin"),
               "demand_reading", "per-pair | per-origin")
        domain(self.traffic_step_ms > 0, "traffic_step_ms", "> 0")
        domain(self.min_state_duration_s * 1000 <= self.max_state_ms(),
               "min_state_duration_s", "<= max_state_duration")
        domain(self.payload_bytes >= 1, "payload_bytes", ">= 1")
        domain(self.turn_speed_ms > 0.0, "turn_speed_ms", "> 0")


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}
_BOOL_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig) if f.type == "bool"}
_INT_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig) if f.type == "int"}
_STR_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig) if f.type == "str"}
_OPTIONAL_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)
                    if "None" in str(f.type)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _OPTIONAL_FIELDS and raw.lower() in ("", "none", "auto"):
        return None
    try:
        if key in _BOOL_FIELDS:
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if key in _INT_FIELDS:
            return int(raw)
        if key in _STR_FIELDS:
            return raw
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from None


def config_from_mapping(overrides: dict) -> ScenarioConfig:
    cfg = ScenarioConfig()
    for key, value in overrides.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown configuration key {key!r}")
        if isinstance(value, str):
            value = _parse_value(key, value)
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse a `key = value` file (one pair per line, `#` comments);
    absent keys keep their documented defaults."""
    text = Path(path).read_text()
    overrides: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        overrides[key.strip()] = raw.strip()
    return config_from_mapping(overrides)


def save_config(cfg: ScenarioConfig, path: str | Path) -> None:
    lines = []
    for f in dataclasses.fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {'' if value is None else value}")
    Path(path).write_text("\n".join(lines) + "\n")
