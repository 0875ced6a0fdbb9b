"""FastAPI application: runs, sweeps and network inspection."""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from ..config import ConfigError, ScenarioConfig
from ..roadnet import build_grid, build_one_junction, undirected_edge_count
from ..scenario import (aggregate_csv, aggregate_grid, make_grid_sweep,
                        make_one_junction_sweep, run_batch)
from ..simulation import run_scenario
from .schemas import (Failure, GridSweepRequest, JunctionSweepRequest,
                      NetworkEdge, NetworkResponse, Report, RunRequest,
                      RunResponse, SweepResponse, SwitchEvent, apply_patch)


def _config_from_patch(patch) -> ScenarioConfig:
    cfg = dataclasses.replace(ScenarioConfig(), **apply_patch(patch))
    try:
        cfg.validate()
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return cfg


def create_app() -> FastAPI:
    app = FastAPI(title="v2isim", description=__doc__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/config/defaults")
    def config_defaults() -> dict:
        return dataclasses.asdict(ScenarioConfig())

    @app.get("/network/{kind}")
    def network(kind: str, edge_length_m: float | None = None,
                grid_n: int = 4) -> NetworkResponse:
        if kind == "one-junction":
            net = build_one_junction(edge_length_m or 300.0)
        elif kind == "grid":
            net = build_grid(grid_n, edge_length_m or 500.0)
        else:
            raise HTTPException(status_code=404,
                                detail="kind must be one-junction or grid")
        return NetworkResponse(
            kind=kind,
            junctions=list(net.junctions),
            edges=[NetworkEdge(id=e.id, frm=e.frm, to=e.to, length_m=e.length,
                               speed_limit_ms=e.speed_limit)
                   for e in (net.edges[eid] for eid in sorted(net.edges))],
            zones={z.id: sorted(set(z.entry_edges) | set(z.exit_edges))
                   for z in net.zones.values()},
            undirected_edge_count=undirected_edge_count(net),
        )

    @app.post("/run")
    def run(req: RunRequest) -> RunResponse:
        cfg = _config_from_patch(req.config)
        result = run_scenario(cfg)
        switch_log = [
            SwitchEvent(time_ms=rec.time, junction=rec.junction,
                        new_phase=rec.new_phase, cause=rec.cause)
            for jid in sorted(result.switch_logs)
            for rec in result.switch_logs[jid]
        ]
        switch_log.sort(key=lambda s: (s.time_ms, s.junction))
        return RunResponse(
            report=Report.from_report(result.report),
            csv_header=result.report.csv_header(),
            csv_row=result.report.csv_row(),
            switch_log=switch_log,
            processed_events=result.processed_events,
            vehicle_trace=result.vehicle_trace,
            message_count=(len(result.message_log)
                           if result.message_log is not None else None),
        )

    def _sweep_response(configs, workers: int, with_aggregate: bool) -> SweepResponse:
        batch = run_batch(configs, workers=workers)
        agg = aggregate_csv(aggregate_grid(batch.reports)) if with_aggregate else None
        return SweepResponse(
            reports=[Report.from_report(r) for r in batch.reports],
            failures=[Failure(scenario=cfg.scenario, seed=cfg.seed, error=err)
                      for cfg, err in batch.failures],
            per_run_csv=batch.per_run_csv(),
            aggregate_csv=agg,
        )

    @app.post("/sweep/junction")
    def sweep_junction(req: JunctionSweepRequest) -> SweepResponse:
        try:
            configs = make_one_junction_sweep(req.demands, req.penetrations,
                                              req.seeds, **apply_patch(req.config))
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _sweep_response(configs, req.workers, with_aggregate=False)

    @app.post("/sweep/grid")
    def sweep_grid(req: GridSweepRequest) -> SweepResponse:
        try:
            configs = make_grid_sweep(req.ratios, req.penetrations,
                                      req.seeds, **apply_patch(req.config))
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _sweep_response(configs, req.workers, with_aggregate=True)

    return app
