"""Experiment generators, batch execution and result aggregation."""

from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .config import ScenarioConfig
from .metrics import MetricsReport
from .simulation import run_scenario


def make_one_junction_config(demand: float, penetration: float, seed: int,
                             **overrides) -> ScenarioConfig:
    cfg = ScenarioConfig(scenario="one-junction", edge_length_m=300.0,
                         sim_duration_s=600.0, demand_rate_per_hour=demand,
                         penetration_rate=penetration, seed=seed)
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def make_one_junction_sweep(demands: list[float], penetrations: list[float],
                            seeds: list[int], **overrides) -> list[ScenarioConfig]:
    """Cartesian product of demand x penetration x seed on the 300 m
    one-junction network, 600 s per run, junction equipped."""
    if not demands or not penetrations or not seeds:
        raise ValueError("demands, penetrations and seeds must be nonempty")
    return [make_one_junction_config(d, p, s, **overrides)
            for d in demands for p in penetrations for s in seeds]


def make_grid_config(equipped_junction_ratio: float, penetration: float,
                     seed: int, **overrides) -> ScenarioConfig:
    cfg = ScenarioConfig(scenario="grid", edge_length_m=500.0, grid_n=4,
                         sim_duration_s=1800.0,
                         equipped_junction_ratio=equipped_junction_ratio,
                         penetration_rate=penetration, seed=seed)
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def make_grid_sweep(ratios: list[float], penetrations: list[float],
                    seeds: list[int], **overrides) -> list[ScenarioConfig]:
    return [make_grid_config(r, p, s, **overrides)
            for r in ratios for p in penetrations for s in seeds]


def _run_one(cfg: ScenarioConfig) -> MetricsReport:
    return run_scenario(cfg).report


@dataclass
class BatchResult:
    reports: list[MetricsReport]
    failures: list[tuple[ScenarioConfig, str]]

    def per_run_csv(self) -> str:
        lines = [MetricsReport.csv_header()]
        lines += [r.csv_row() for r in self.reports]
        return "\n".join(lines) + "\n"


def _sort_key(report: MetricsReport):
    return (report.scenario, report.equipped_junction_ratio,
            report.penetration_rate, report.demand, report.seed)


def run_batch(configs: list[ScenarioConfig], workers: int = 1) -> BatchResult:
    """Execute every config independently (optionally in parallel) and
    return reports in a deterministic (scenario, seed) order."""
    reports: list[MetricsReport] = []
    failures: list[tuple[ScenarioConfig, str]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(cfg, pool.submit(_run_one, cfg)) for cfg in configs]
            for cfg, fut in futures:
                try:
                    reports.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - aggregation proceeds
                    failures.append((cfg, str(exc)))
    else:
        for cfg in configs:
            try:
                reports.append(_run_one(cfg))
            except Exception as exc:  # noqa: BLE001
                failures.append((cfg, str(exc)))
    reports.sort(key=_sort_key)
    return BatchResult(reports, failures)


@dataclass
class AggregateCell:
    """Mean +- sd of one metric for one (equipped ratio, penetration) cell,
    with the per-seed gain against the 0%-penetration baseline cell."""

    metric: str
    equipped_junction_ratio: float
    penetration_rate: float
    n_runs: int
    mean: float
    sd: float
    gain_mean_pct: float | None
    gain_sd_pct: float | None


GRID_GAIN_METRICS = ("ended", "running", "mean_travel_time_s")


def aggregate_grid(reports: list[MetricsReport]) -> list[AggregateCell]:
    """Tables-style aggregation: per cell mean +- sd and the paired-seed
    percentage gain versus the baseline (penetration 0, same equipped row)."""
    cells: dict[tuple[float, float], dict[int, MetricsReport]] = {}
    for r in reports:
        cells.setdefault((r.equipped_junction_ratio, r.penetration_rate), {})[r.seed] = r
    out: list[AggregateCell] = []
    for (ratio, pen) in sorted(cells):
        by_seed = cells[(ratio, pen)]
        baseline = cells.get((ratio, 0.0), {})
        for metric in GRID_GAIN_METRICS:
            values = [getattr(by_seed[s], metric) for s in sorted(by_seed)]
            values = [v for v in values if v is not None]
            gains = []
            for seed in sorted(by_seed):
                base = baseline.get(seed)
                cur = by_seed[seed]
                if base is None:
                    continue
                b, c = getattr(base, metric), getattr(cur, metric)
                if b in (None, 0) or c is None:
                    continue
                gains.append(100.0 * (c - b) / b)
            out.append(AggregateCell(
                metric=metric,
                equipped_junction_ratio=ratio,
                penetration_rate=pen,
                n_runs=len(values),
                mean=statistics.fmean(values) if values else float("nan"),
                sd=statistics.stdev(values) if len(values) > 1 else 0.0,
                gain_mean_pct=statistics.fmean(gains) if gains else None,
                gain_sd_pct=(statistics.stdev(gains) if len(gains) > 1
                             else (0.0 if gains else None)),
            ))
    return out


def aggregate_csv(cells: list[AggregateCell]) -> str:
    header = ("metric,equipped_junction_ratio,penetration_rate,n_runs,"
              "mean,sd,gain_mean_pct,gain_sd_pct")
    lines = [header]
    for c in cells:
        gm = "" if c.gain_mean_pct is None else f"{c.gain_mean_pct:.9g}"
        gs = "" if c.gain_sd_pct is None else f"{c.gain_sd_pct:.9g}"
        lines.append(f"{c.metric},{c.equipped_junction_ratio:.9g},"
                     f"{c.penetration_rate:.9g},{c.n_runs},"
                     f"{c.mean:.9g},{c.sd:.9g},{gm},{gs}")
    return "\n".join(lines) + "\n"
