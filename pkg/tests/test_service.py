"""HTTP endpoints: request validation, artifact payloads, determinism."""

import pytest
from fastapi.testclient import TestClient

from scmra.service import create_app

SMALL_SIM = {
    "bs_rows": 4, "bs_cols": 4, "scm_rows": 2, "scm_cols": 2,
    "channel_type": "synthetic-rank", "synthetic_snr_max_db": [35.0],
    "horizon_symbols": 600, "warmup_symbols": 50, "offered_traffic": 1.0,
}


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok" and body["version"]


def test_analyze_endpoint(client):
    resp = client.post("/analyze", json={"config": {"analyze_snr_max_db": [35.0]},
                                         "seed": 1})
    assert resp.status_code == 200
    body = resp.json()
    names = {f["name"] for f in body["files"]}
    assert names == {"snr_trajectory.csv", "analyze_summary.csv"}
    assert body["manifest"]["seed"] == 1
    assert all(body["manifest_sha256"] in f["content"].splitlines()[0]
               for f in body["files"])


def test_simulate_endpoint_deterministic(client):
    request = {"config": SMALL_SIM, "seed": 9}
    a = client.post("/simulate", json=request).json()
    b = client.post("/simulate", json=request).json()
    assert a == b


def test_overrides_applied(client):
    resp = client.post("/linkbudget", json={
        "config": {}, "overrides": ["linkbudget_distance_m=20.0"], "seed": 0})
    assert resp.status_code == 200
    assert resp.json()["manifest"]["config"]["linkbudget_distance_m"] == 20.0


def test_config_error_becomes_422(client):
    resp = client.post("/simulate", json={"config": {"bandwidth_hz": -1}})
    assert resp.status_code == 422
    assert "bandwidth_hz" in resp.json()["detail"]


def test_unknown_key_becomes_422(client):
    resp = client.post("/analyze", json={"config": {"frobnicate": 1}})
    assert resp.status_code == 422
    assert "frobnicate" in resp.json()["detail"]


def test_sweep_endpoint_small(client):
    resp = client.post("/sweep", json={"config": {
        **SMALL_SIM, "sweep_traffic": [1.0], "episode_symbols": 1200,
        "max_packets_per_point": 8}, "seed": 3})
    assert resp.status_code == 200
    names = {f["name"] for f in resp.json()["files"]}
    assert names == {"per_sweep.csv"}
