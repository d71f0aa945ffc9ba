"""Thin-client CLI: argument handling, artifact writing, verify subcommand."""

import json

from scmra.cli import main

SMALL_SIM = {
    "bs_rows": 4, "bs_cols": 4, "scm_rows": 2, "scm_cols": 2,
    "channel_type": "synthetic-rank", "synthetic_snr_max_db": [35.0],
    "horizon_symbols": 600, "warmup_symbols": 50, "offered_traffic": 1.0,
}


def _write_cfg(tmp_path, payload):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(payload))
    return str(path)


def test_analyze_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["analyze", "--seed", "1", "--out", str(out)])
    assert code == 0
    assert (out / "manifest.json").exists()
    assert (out / "snr_trajectory.csv").exists()
    assert "analyze" in capsys.readouterr().out


def test_simulate_rerun_byte_identical(tmp_path):
    cfg = _write_cfg(tmp_path, SMALL_SIM)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(out2)]) == 0
    for name in ("manifest.json", "events.ndjson", "packets.csv",
                 "simulate_summary.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_set_override_changes_manifest(tmp_path):
    out = tmp_path / "run"
    code = main(["linkbudget", "--seed", "0", "--out", str(out),
                 "--set", "linkbudget_distance_m=25"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["linkbudget_distance_m"] == 25


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, {"bandwidth_hz": -5})
    code = main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")])
    assert code == 2
    assert "bandwidth_hz" in capsys.readouterr().err


def test_verify_roundtrip_and_tamper(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, SMALL_SIM)
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, "--seed", "2", "--out", str(out)]) == 0
    assert main(["verify", str(out)]) == 0
    csv_path = out / "simulate_summary.csv"
    csv_path.write_text(csv_path.read_text().replace(
        csv_path.read_text().splitlines()[0],
        "# manifest_sha256=deadbeef"))
    assert main(["verify", str(out)]) == 1
    assert "mismatch" in capsys.readouterr().err
