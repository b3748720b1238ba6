import json
import warnings

import numpy as np
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from fdisac.cli import OUT_ENV, build_parser, main
from fdisac.harness import solve_once
from fdisac.scenario import SystemConfig
from fdisac.schemas import from_pairs, pairs
from fdisac.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


class TestSchemas:
    def test_pairs_round_trip(self):
        v = np.array([1 + 2j, -0.5j, 3.0])
        np.testing.assert_array_equal(from_pairs(pairs(v)), v)


class TestService:
    def test_health(self, client):
        assert client.get("/health").json()["status"] == "ok"

    def test_defaults(self, client):
        body = client.get("/defaults").json()
        assert body["n_t"] == 16 and body["beta"] == 1e-25

    def test_solve_matches_library(self, client):
        body = client.post("/solve", json={"seed": 2, "si_level_db": 40, "rho": 10}).json()
        cfg = SystemConfig(si_level_db=40.0, rng_seed=2).with_priority(10.0)
        state, report, _, _ = solve_once(cfg)
        np.testing.assert_allclose(from_pairs(body["state"]["p"]), state.p)
        assert body["report"]["iterations"] == report.iterations
        assert body["report"]["objective_trace"] == list(report.objective_trace)

    def test_config_error_is_422(self, client):
        res = client.post("/solve", json={"config": {"n_t": 0}})
        assert res.status_code == 422
        assert res.json()["key"] == "n_t"

    def test_request_validation(self, client):
        assert client.post("/solve", json={"rho": -1}).status_code == 422

    def test_baseline(self, client):
        body = client.post("/baseline", json={"kind": "nsp"}).json()
        assert body["kind"] == "nsp" and len(body["state"]["w"]) == 16

    def test_radar_map(self, client):
        cfg = {"frame_symbols": 128, "frame_blocks": 32, "n_lags": 8}
        body = client.post("/radar-map", json={"config": cfg, "method": "radar_only",
                                                "include_si": True}).json()
        assert (body["peak_range_bin"], body["peak_doppler_bin"]) == (0, 0)
        assert body["csv"].startswith("# range_resolution_m")

    def test_angle(self, client):
        body = client.post("/angle", json={"methods": ["proposed", "nsp"]}).json()
        assert [e["method"] for e in body["spectra"]] == ["proposed", "nsp"]
        assert body["spectra"][0]["estimate_deg"] == pytest.approx(45.0, abs=1.0)

    def test_sweep(self, client):
        cfg = {"si_levels_db": [60], "rho_values": [1], "radar_map": False}
        body = client.post("/sweep", json={"config": cfg, "trials": 1, "formats": ["csv"]}).json()
        assert "si_sweep.csv" in body["files"] and "summary.json" not in body["files"]
        assert body["manifest"]["config"]["trials"] == 1
        assert len(body["cells"]) == 4


class TestCLI:
    def test_subcommands(self):
        parser = build_parser()
        for cmd in ("sweep", "solve-once", "radar-map", "angle", "baseline", "serve"):
            assert parser.parse_args([cmd]).command == cmd

    def test_solve_once_writes_outputs(self, tmp_path, capsys):
        assert main(["solve-once", "--seed", "1", "--out", str(tmp_path)]) == 0
        body = json.loads((tmp_path / "solve_once.json").read_text())
        assert body["report"]["converged"]
        assert (tmp_path / "solve_once_trace.csv").read_text().startswith("iteration,objective,zeta")

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
        assert main(["baseline", "--kind", "radar_only", "--format", "json"]) == 0
        assert (tmp_path / "env" / "baseline_radar_only.json").exists()
        assert not (tmp_path / "env" / "baseline_radar_only.csv").exists()

    def test_sweep(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("si_levels_db: [60]\nrho_values: [1]\nradar_map: false\n")
        assert main(["sweep", "--config", str(cfg), "--trials", "1", "--out", str(tmp_path / "o")]) == 0
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["config"]["trials"] == 1

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("n_t: 0\n")
        assert main(["solve-once", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "n_t" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["angle", "--config", str(tmp_path / "nope.yaml")]) == 2

    def test_bad_arguments(self):
        assert main(["solve-once", "--seed", "abc"]) == 2
        assert main([]) == 2

    def test_unreachable_server(self, tmp_path):
        assert main(["solve-once", "--server", "http://127.0.0.1:9", "--out", str(tmp_path)]) == 1
