"""Experiment commands: resolve config, execute, emit deterministic artifacts.

Every run produces a manifest (full resolved config + seed + package version)
whose SHA-256 is embedded in each emitted file, so results can be checked
against the exact configuration that produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, analytics
from .channel import modified_round_trip
from .config import SimConfig, db_to_linear
from .linalg import hermitian_eigendecomposition
from .traffic import (finalize_events, monte_carlo_per, packet_outcomes,
                      run_world, wilson_interval)

COMMANDS = ("analyze", "simulate", "linkbudget", "sweep")
SCHEMA_VERSION = 1


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _db_or_none(linear: float) -> float | None:
    return None if linear <= 0 else 10.0 * math.log10(linear)


def manifest_for(command: str, cfg: SimConfig) -> dict:
    return {
        "command": command,
        "package": "scmra",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "config": cfg.resolved(),
    }


def manifest_hash(manifest: dict) -> str:
    canonical = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class RunResult:
    command: str
    manifest: dict
    manifest_sha256: str
    files: dict[str, str]  # file name -> text content


def _csv(schema: str, sha: str, columns: list[str], rows: list[list]) -> str:
    lines = [f"# manifest_sha256={sha}",
             f"# schema={schema}.v{SCHEMA_VERSION}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _ndjson(sha: str, records) -> str:
    head = {"event": "manifest_ref", "manifest_sha256": sha,
            "schema_version": SCHEMA_VERSION}
    lines = [json.dumps(head)]
    lines.extend(json.dumps(r) for r in records)
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------

def run_analyze(cfg: SimConfig) -> RunResult:
    """SNR-evolution recursion of the scouting iteration, plus fixed points."""
    manifest = manifest_for("analyze", cfg)
    sha = manifest_hash(manifest)
    n = cfg.analyze_n if cfg.analyze_n is not None else cfg.n_bs
    snr_max = np.array([db_to_linear(s) for s in cfg.analyze_snr_max_db])
    init = snr_max / n if cfg.analyze_init == "bootstrap" else snr_max / n ** 2
    traj = analytics.snr_trajectory(snr_max, n, init, cfg.analyze_horizon)

    r = snr_max.size
    columns = ["k"] + [f"snr{j + 1}_db" for j in range(r)] + ["format_version"]
    rows = []
    for k in range(traj.shape[0]):
        rows.append([k + 1] + [_db_or_none(traj[k, j]) for j in range(r)]
                    + [SCHEMA_VERSION])
    trajectory_csv = _csv("analyze_trajectory", sha, columns, rows)

    srows = []
    for j in range(r):
        fp = analytics.rank1_fixed_point(float(snr_max[j]), n)
        srows.append([j + 1, cfg.analyze_snr_max_db[j],
                      _db_or_none(analytics.bootstrap_snr(float(snr_max[j]), n)),
                      _db_or_none(fp), _db_or_none(traj[-1, j]), SCHEMA_VERSION])
    summary_csv = _csv("analyze_summary", sha,
                       ["direction", "snr_max_db", "bootstrap_snr_db",
                        "isolated_fixed_point_db", "final_snr_db",
                        "format_version"], srows)

    return RunResult("analyze", manifest, sha,
                     {"snr_trajectory.csv": trajectory_csv,
                      "analyze_summary.csv": summary_csv})


def run_linkbudget(cfg: SimConfig) -> RunResult:
    """Closed-form free-space link budget at the configured distance."""
    manifest = manifest_for("linkbudget", cfg)
    sha = manifest_hash(manifest)
    d = cfg.linkbudget_distance_m
    sigma = cfg.sigma_sq_w
    snr_dec = analytics.free_space_snr(
        cfg.tx_power_w, cfg.scm_gain, cfg.n_bs, cfg.m_scm,
        cfg.bs_element_gain, cfg.scm_element_gain, cfg.wavelength_m, d, sigma)
    snr_scout_max = snr_dec * cfg.scout_power_w / cfg.tx_power_w
    boot = analytics.bootstrap_snr(snr_scout_max, cfg.n_bs)

    columns = ["distance_m", "n_bs", "m_scm", "sigma_w_sq_w", "sigma_eta_sq_w",
               "free_space_snr_db", "scout_snr_max_db", "bootstrap_snr_db",
               "decision_snr_db"]
    row = [d, cfg.n_bs, cfg.m_scm, cfg.sigma_w_sq_w, cfg.sigma_eta_sq_w,
           _db_or_none(snr_dec), _db_or_none(snr_scout_max), _db_or_none(boot),
           _db_or_none(analytics.decision_snr(cfg.tx_power_w, cfg.scout_power_w,
                                              snr_scout_max))]
    if cfg.linkbudget_eigen_check:
        from .channel import los_channel

        center = (cfg.bs_center_m[0], cfg.bs_center_m[1], cfg.bs_center_m[2] + d)
        h = los_channel(cfg.bs_geometry(), cfg.scm_geometry(center),
                        cfg.wavelength_m, cfg.bs_element_gain, cfg.scm_element_gain)
        vals, _ = hermitian_eigendecomposition(modified_round_trip(h, cfg.scm_gain))
        snr_eig = cfg.tx_power_w * float(vals[0]) ** 2 / sigma
        columns += ["lambda1", "snr_from_eigen_db", "eigen_rel_error"]
        row += [float(vals[0]), _db_or_none(snr_eig),
                abs(snr_eig - snr_dec) / snr_dec]
    columns.append("format_version")
    row.append(SCHEMA_VERSION)
    return RunResult("linkbudget", manifest, sha,
                     {"linkbudget.csv": _csv("linkbudget", sha, columns, [row])})


def run_simulate(cfg: SimConfig) -> RunResult:
    """One traffic episode; emits the event log and per-packet results."""
    manifest = manifest_for("simulate", cfg)
    sha = manifest_hash(manifest)

    world = run_world(cfg)
    outcomes = packet_outcomes(world)
    records = list(finalize_events(world, outcomes))

    prows = []
    for o in outcomes:
        if o.counted:
            prows.append([o.ue_id, o.arrival_symbol, o.detected, o.setup_symbols,
                          o.n_tasks, o.fully_decoded, o.bit_errors,
                          o.bits_compared, SCHEMA_VERSION])

    counted = [o for o in outcomes if o.counted]
    n = len(counted)
    n_det = sum(o.detected for o in counted)
    n_err = n - n_det
    ci_low, ci_high = wilson_interval(n_err, n)
    setups = [o.setup_symbols for o in counted if o.detected]
    srow = [cfg.offered_traffic, n, n_det, n_err,
            (n_err / n) if n else 0.0, ci_low, ci_high,
            float(np.median(setups)) if setups else None,
            (sum(o.fully_decoded for o in counted) / n) if n else 0.0,
            SCHEMA_VERSION]
    summary_csv = _csv("simulate_summary", sha,
                       ["g_offered", "n_packets", "n_detected", "n_errors",
                        "per", "ci_low", "ci_high", "median_setup_symbols",
                        "fully_decoded_rate", "format_version"], [srow])
    packets_csv = _csv("packets", sha,
                       ["ue_id", "arrival_symbol", "detected", "setup_symbols",
                        "n_tasks", "fully_decoded", "bit_errors",
                        "bits_compared", "format_version"], prows)
    return RunResult("simulate", manifest, sha,
                     {"events.ndjson": _ndjson(sha, records),
                      "packets.csv": packets_csv,
                      "simulate_summary.csv": summary_csv})


def run_sweep(cfg: SimConfig, workers: int = 1) -> RunResult:
    """Monte Carlo PER versus offered traffic."""
    manifest = manifest_for("sweep", cfg)
    sha = manifest_hash(manifest)
    rows = []
    for g in cfg.sweep_traffic:
        est = monte_carlo_per(dataclasses.replace(cfg, offered_traffic=g),
                              workers=workers)
        rows.append([g, est.per, est.ci_low, est.ci_high, est.n_packets,
                     est.n_errors, est.n_detected, est.setup_median,
                     est.setup_cdf_at(10), est.fully_decoded_rate,
                     est.n_episodes, SCHEMA_VERSION])
    csv = _csv("per_sweep", sha,
               ["g_offered", "per", "ci_low", "ci_high", "n_packets",
                "n_errors", "n_detected", "median_setup_symbols",
                "setup_cdf_at_10", "fully_decoded_rate", "n_episodes",
                "format_version"], rows)
    return RunResult("sweep", manifest, sha, {"per_sweep.csv": csv})


def execute(command: str, cfg: SimConfig, workers: int = 1) -> RunResult:
    if command == "analyze":
        return run_analyze(cfg)
    if command == "linkbudget":
        return run_linkbudget(cfg)
    if command == "simulate":
        return run_simulate(cfg)
    if command == "sweep":
        return run_sweep(cfg, workers=workers)
    raise ValueError(f"unknown command '{command}' (choose from {COMMANDS})")


# ----------------------------------------------------------------------
# Artifact I/O and integrity checking
# ----------------------------------------------------------------------

def write_result(result: RunResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(result.manifest, sort_keys=True, indent=2) + "\n")
    paths.append(manifest_path)
    for name, content in sorted(result.files.items()):
        path = out / name
        path.write_text(content)
        paths.append(path)
    return paths


def verify_output_dir(out_dir: str | Path) -> list[str]:
    """Check that every artifact in a run directory matches its manifest.

    Returns a list of problems; empty means the directory is consistent.
    """
    out = Path(out_dir)
    problems = []
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        return [f"missing manifest.json in {out}"]
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        return [f"manifest.json unreadable: {exc}"]
    sha = manifest_hash(manifest)
    for path in sorted(out.iterdir()):
        if path.name == "manifest.json" or path.is_dir():
            continue
        text = path.read_text()
        if path.suffix == ".csv":
            first = text.splitlines()[0] if text else ""
            if first != f"# manifest_sha256={sha}":
                problems.append(f"{path.name}: manifest hash mismatch")
        elif path.suffix == ".ndjson":
            first = text.splitlines()[0] if text else ""
            try:
                head = json.loads(first)
            except json.JSONDecodeError:
                head = {}
            if head.get("manifest_sha256") != sha:
                problems.append(f"{path.name}: manifest hash mismatch")
    return problems
