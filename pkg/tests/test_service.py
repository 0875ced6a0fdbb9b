import json
import warnings

import pytest
from click.testing import CliRunner

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from v2isim.cli import main
from v2isim.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


TINY = {"scenario": "one-junction", "sim_duration_s": 60.0,
        "demand_rate_per_hour": 300.0, "seed": 1}


class TestEndpoints:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_config_defaults_reflect_documented_values(self, client):
        body = client.get("/config/defaults").json()
        assert body["cycle_duration_s"] == 90.0
        assert body["d_min_m"] == 100.0
        assert body["alpha"] == 2.0
        assert body["payload_bytes"] == 30

    def test_network_grid(self, client):
        body = client.get("/network/grid").json()
        assert len(body["junctions"]) == 16
        assert body["undirected_edge_count"] == 40
        assert sorted(int(k) for k in body["zones"]) == list(range(9))

    def test_network_unknown_kind(self, client):
        assert client.get("/network/hexagon").status_code == 404

    def test_run_small_scenario(self, client):
        resp = client.post("/run", json={"config": TINY})
        assert resp.status_code == 200
        body = resp.json()
        assert body["report"]["inserted"] > 0
        assert body["csv_row"].startswith("one-junction,1,")
        assert body["switch_log"], "expected at least one committed switch"
        assert {"time_ms", "junction", "new_phase", "cause"} <= set(body["switch_log"][0])

    def test_run_is_deterministic(self, client):
        a = client.post("/run", json={"config": TINY}).json()
        b = client.post("/run", json={"config": TINY}).json()
        assert a["csv_row"] == b["csv_row"]

    def test_run_rejects_out_of_domain_value(self, client):
        resp = client.post("/run", json={"config": {**TINY, "alpha": 1.0}})
        assert resp.status_code == 422
        assert "alpha" in resp.json()["detail"]

    def test_run_rejects_unknown_key(self, client):
        resp = client.post("/run", json={"config": {"warp_speed": 9}})
        assert resp.status_code == 422

    def test_sweep_junction(self, client):
        resp = client.post("/sweep/junction", json={
            "demands": [300.0], "penetrations": [0.0, 1.0], "seeds": [1],
            "config": {"sim_duration_s": 60.0}})
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["reports"]) == 2
        assert body["per_run_csv"].count("\n") == 3  # header + 2 rows
        assert body["aggregate_csv"] is None

    def test_sweep_grid_aggregates(self, client):
        resp = client.post("/sweep/grid", json={
            "ratios": [1.0], "penetrations": [0.0], "seeds": [1],
            "config": {"sim_duration_s": 60.0}})
        assert resp.status_code == 200
        assert "gain_mean_pct" in resp.json()["aggregate_csv"]


class TestCli:
    def write_cfg(self, tmp_path, extra=""):
        path = tmp_path / "tiny.cfg"
        path.write_text("scenario = one-junction\nsim_duration_s = 60\n"
                        "demand_rate_per_hour = 300\n" + extra)
        return str(path)

    def test_run_prints_report(self, tmp_path):
        result = CliRunner().invoke(main, ["run", self.write_cfg(tmp_path)])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["scenario"] == "one-junction"

    def test_run_writes_files(self, tmp_path):
        out = tmp_path / "out"
        result = CliRunner().invoke(
            main, ["run", self.write_cfg(tmp_path), "--out-dir", str(out),
                   "--seed", "5", "--trace"])
        assert result.exit_code == 0, result.output
        assert (out / "report.json").exists()
        assert (out / "run.csv").exists()
        assert (out / "switches.csv").exists()
        assert (out / "vehicle_trace.csv").exists()
        assert json.loads((out / "report.json").read_text())["seed"] == 5

    def test_run_rejects_invalid_config(self, tmp_path):
        result = CliRunner().invoke(
            main, ["run", self.write_cfg(tmp_path, "alpha = 1\n")])
        assert result.exit_code != 0
        assert "alpha" in result.output

    def test_sweep_junction_writes_csv(self, tmp_path):
        out = tmp_path / "sweep"
        # keep it tiny: the CLI exposes the axes, the config stays default
        result = CliRunner().invoke(main, [
            "sweep-junction", "--demands", "300", "--penetrations", "0",
            "--replications", "1", "--out-dir", str(out)])
        assert result.exit_code == 0, result.output
        text = (out / "per_run.csv").read_text()
        assert text.splitlines()[0].startswith("scenario,seed")
        assert len(text.strip().splitlines()) == 2

    def test_sweep_rejects_bad_number_list(self):
        result = CliRunner().invoke(main, ["sweep-junction", "--demands", "abc"])
        assert result.exit_code != 0

    def test_network_command(self):
        result = CliRunner().invoke(main, ["network", "one-junction"])
        assert result.exit_code == 0
        assert json.loads(result.output)["undirected_edge_count"] == 4
