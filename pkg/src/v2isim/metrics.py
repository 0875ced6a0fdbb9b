"""Indicator computation over traffic, comms and control logs."""

from __future__ import annotations

from dataclasses import dataclass, field

from .signals import SwitchRecord


def mean_end_to_end_delay_s(delays_ms: list[int]) -> float | None:
    """Mean stream-message delay in seconds; None for an empty log.

    A retransmitted message's delay spans original send to final delivery.
    """
    if not delays_ms:
        return None
    return sum(delays_ms) / len(delays_ms) / 1000.0


def rsu_throughput_bps(bytes_delivered_at_ia: int, sim_duration_s: float) -> float:
    """Bits of application payload received at the IA per simulated second."""
    if sim_duration_s <= 0:
        raise ValueError("sim_duration must be positive")
    return 8.0 * bytes_delivered_at_ia / sim_duration_s

def app_data_rate_bps(bytes_sent: int, sim_duration_s: float) -> float:
    """Bits of application payload sent (delivered or not) per simulated second."""
    if sim_duration_s <= 0:
        raise ValueError("sim_duration must be positive")
    return 8.0 * bytes_sent / sim_duration_s


def traffic_indicators(vehicles, t_end_ms: int) -> dict:
    """Counts, ended ratio and mean travel times over ended vehicles."""
    inserted = [v for v in vehicles if v.insert_time is not None]
    ended = [v for v in inserted if v.end_time is not None and v.end_time <= t_end_ms]
    n_ins, n_end = len(inserted), len(ended)
    travel = [(v.end_time - v.insert_time) / 1000.0 for v in ended]
    travel_eq = [(v.end_time - v.insert_time) / 1000.0 for v in ended if v.equipped]
    return {
        "inserted": n_ins,
        "ended": n_end,
        "running": n_ins - n_end,
        "ended_ratio": n_end / n_ins if n_ins else None,
        "mean_travel_time_s": sum(travel) / len(travel) if travel else None,
        "mean_travel_time_equipped_s": sum(travel_eq) / len(travel_eq) if travel_eq else None,
    }


def mean_action_interval_s(switch_log: list[SwitchRecord]) -> float | None:
    """Mean time between consecutive committed switches; None below 2 switches."""
    if len(switch_log) < 2:
        return None
    times = [rec.time for rec in switch_log]
    gaps = [(b - a) for a, b in zip(times, times[1:])]
    return sum(gaps) / len(gaps) / 1000.0


@dataclass
class MetricsReport:
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

    CSV_COLUMNS = [
        "scenario", "seed", "penetration_rate", "equipped_junction_ratio",
        "demand", "sim_duration_s", "inserted", "ended", "running", "queued",
        "ended_ratio", "mean_travel_time_s", "mean_travel_time_equipped_s",
        "mean_delay_s", "rsu_throughput_bps", "app_data_rate_bps",
        "mean_action_interval_s", "mean_vehicle_speed_ms",
        "messages_sent", "messages_delivered", "safety_violations",
    ]

    def overall_action_interval_s(self) -> float | None:
        vals = [v for v in self.mean_action_interval_s.values() if v is not None]
        return sum(vals) / len(vals) if vals else None

    def csv_row(self) -> str:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return f"{v:.9g}"
            return str(v)

        data = {
            **{k: getattr(self, k) for k in self.CSV_COLUMNS
               if k != "mean_action_interval_s"},
            "mean_action_interval_s": self.overall_action_interval_s(),
        }
        return ",".join(fmt(data[k]) for k in self.CSV_COLUMNS)

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.CSV_COLUMNS)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "penetration_rate": self.penetration_rate,
            "equipped_junction_ratio": self.equipped_junction_ratio,
            "demand": self.demand,
            "sim_duration_s": self.sim_duration_s,
            "inserted": self.inserted,
            "ended": self.ended,
            "running": self.running,
            "queued": self.queued,
            "ended_ratio": self.ended_ratio,
            "mean_travel_time_s": self.mean_travel_time_s,
            "mean_travel_time_equipped_s": self.mean_travel_time_equipped_s,
            "mean_delay_s": self.mean_delay_s,
            "rsu_throughput_bps": self.rsu_throughput_bps,
            "rsu_throughput_per_ia_bps": self.rsu_throughput_per_ia_bps,
            "app_data_rate_bps": self.app_data_rate_bps,
            "mean_action_interval_s": self.mean_action_interval_s,
            "mean_vehicle_speed_ms": self.mean_vehicle_speed_ms,
            "messages_sent": self.messages_sent,
            "messages_delivered": self.messages_delivered,
            "safety_violations": self.safety_violations,
        }
