"""Command-line client for the simulation service.

Every command talks HTTP to the service API; by default an in-process
instance is used, with --server pointing the same commands at a remote one.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import httpx

from .config import ConfigError, ScenarioConfig, load_config
from .service import create_app


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    return TestClient(create_app())


def _post(server: str | None, path: str, payload: dict) -> dict:
    with _client(server) as client:
        resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise click.ClickException(f"{path}: {detail}")
    return resp.json()


def _config_payload(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)


def _write_or_print(out_dir: str | None, name: str, text: str) -> None:
    if out_dir:
        path = Path(out_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        click.echo(f"wrote {path}")
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _seed_list(seed: int, replications: int) -> list[int]:
    return list(range(seed, seed + replications))


@click.group()
def main() -> None:
    """Road-traffic and V2I co-simulation."""


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write results to files instead of stdout.")
@click.option("--trace", is_flag=True, help="Record the vehicle trace.")
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL (default: run in-process).")
def run(config_file: str, seed: int | None, out_dir: str | None,
        trace: bool, server: str | None) -> None:
    """Run a single scenario described by a key=value CONFIG_FILE."""
    try:
        cfg = load_config(config_file)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if trace:
        cfg = dataclasses.replace(cfg, record_vehicle_trace=True)
    body = _post(server, "/run", {"config": _config_payload(cfg)})
    _write_or_print(out_dir, "report.json",
                    json.dumps(body["report"], indent=2) + "\n")
    if out_dir:
        _write_or_print(out_dir, "run.csv",
                        body["csv_header"] + "\n" + body["csv_row"] + "\n")
        switches = "\n".join(
            f"{s['time_ms']},{s['junction']},{s['new_phase']},{s['cause']}"
            for s in body["switch_log"])
        _write_or_print(out_dir, "switches.csv",
                        "time_ms,junction,new_phase,cause\n" + switches + "\n")
        if body.get("vehicle_trace") is not None:
            trace_lines = "\n".join(",".join(str(v) for v in row)
                                    for row in body["vehicle_trace"])
            _write_or_print(out_dir, "vehicle_trace.csv", trace_lines + "\n")


def _run_sweep(server, path, payload, out_dir) -> None:
    body = _post(server, path, payload)
    if body["failures"]:
        for f in body["failures"]:
            click.echo(f"failed: {f['scenario']} seed={f['seed']}: {f['error']}",
                       err=True)
    _write_or_print(out_dir, "per_run.csv", body["per_run_csv"])
    if body.get("aggregate_csv"):
        _write_or_print(out_dir, "aggregate.csv", body["aggregate_csv"])
    if body["failures"]:
        sys.exit(1)


@main.command("sweep-junction")
@click.option("--demands", default="150,300,600,900", show_default=True,
              help="Comma-separated demands (veh/lane/h).")
@click.option("--penetrations", default="0,0.25,0.5,1.0", show_default=True)
@click.option("--seed", type=int, default=1, show_default=True,
              help="First seed of the replication range.")
@click.option("--replications", type=int, default=3, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--trace", is_flag=True, help="Record message logs per run.")
@click.option("--server", default=None, metavar="URL")
def sweep_junction(demands, penetrations, seed, replications, out_dir,
                   workers, trace, server) -> None:
    """Demand x penetration sweep on the single-junction scenario."""
    payload = {
        "demands": _floats(demands),
        "penetrations": _floats(penetrations),
        "seeds": _seed_list(seed, replications),
        "workers": workers,
        "config": {"record_messages": True} if trace else {},
    }
    _run_sweep(server, "/sweep/junction", payload, out_dir)


@main.command("sweep-grid")
@click.option("--ratios", default="0.25,0.5,1.0", show_default=True,
              help="Comma-separated equipped-junction ratios.")
@click.option("--penetrations", default="0,0.2,0.5,0.8", show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--replications", type=int, default=20, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--trace", is_flag=True, help="Record message logs per run.")
@click.option("--server", default=None, metavar="URL")
def sweep_grid(ratios, penetrations, seed, replications, out_dir,
               workers, trace, server) -> None:
    """Equipped-ratio x penetration sweep on the 4x4 grid scenario."""
    payload = {
        "ratios": _floats(ratios),
        "penetrations": _floats(penetrations),
        "seeds": _seed_list(seed, replications),
        "workers": workers,
        "config": {"record_messages": True} if trace else {},
    }
    _run_sweep(server, "/sweep/grid", payload, out_dir)


@main.command()
@click.argument("kind", type=click.Choice(["one-junction", "grid"]))
@click.option("--edge-length", type=float, default=None,
              help="Edge length in meters (default: scenario default).")
@click.option("--grid-n", type=int, default=4, show_default=True)
@click.option("--server", default=None, metavar="URL")
def network(kind: str, edge_length: float | None, grid_n: int,
            server: str | None) -> None:
    """Print a network description as JSON."""
    params = {"grid_n": grid_n}
    if edge_length is not None:
        params["edge_length_m"] = edge_length
    with _client(server) as client:
        resp = client.get(f"/network/{kind}", params=params)
    if resp.status_code != 200:
        raise click.ClickException(resp.text)
    click.echo(json.dumps(resp.json(), indent=2))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port)


def _floats(raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise click.ClickException(f"not a number list: {raw!r}")


if __name__ == "__main__":
    main()
