"""Run configuration: full parameter set with the default link/protocol values.

Every physical quantity carries its unit in the key name (``*_dbm``, ``*_hz``,
``*_s``, ``*_m``). dB values convert to linear once, at load time, using the
10*log10 power convention throughout; the backscatter gain obtained this way
is applied as an amplitude gain (it enters the link budget squared).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

BOLTZMANN_J_PER_K = 1.380649e-23
REFERENCE_TEMPERATURE_K = 290.0
SPEED_OF_LIGHT_M_PER_S = 299_792_458.0

CHANNEL_TYPES = ("los-free-space", "clustered-nlos", "synthetic-rank")
ANALYZE_INITS = ("bootstrap", "bootstrap-squared")


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        raise ValueError("dB conversion requires a positive value")
    return 10.0 * math.log10(value)


def dbm_to_watts(value_dbm: float) -> float:
    return 1e-3 * db_to_linear(value_dbm)


class ConfigError(ValueError):
    """Invalid configuration; message names the offending key and constraint."""

    def __init__(self, key: str, constraint: str):
        self.key = key
        self.constraint = constraint
        super().__init__(f"config key '{key}': {constraint}")


@dataclass(frozen=True)
class SimConfig:
    """Resolved run configuration. Defaults reproduce the reference setup."""

    # Link
    carrier_frequency_hz: float = 100e9
    bandwidth_hz: float = 10e6
    symbol_time_s: float = 100e-9
    tx_power_dbm: float = -5.0
    scout_boost_db: float = 10.0
    scm_backscatter_gain_db: float = 20.0
    bs_element_gain_db: float = 0.0
    scm_element_gain_db: float = 0.0
    scm_noise_figure_db: float = 3.0
    bs_noise_figure_db: float = 3.0

    # Arrays (planar, xy-plane)
    bs_rows: int = 30
    bs_cols: int = 30
    scm_rows: int = 20
    scm_cols: int = 20
    element_spacing_m: float | None = None  # None -> half wavelength
    bs_center_m: tuple[float, float, float] = (0.0, 0.0, 0.0)

    # Channel
    channel_type: str = "los-free-space"
    pathloss_exponent: float = 2.0
    cluster_count: int = 5
    delay_spread_s: float = 9e-9
    synthetic_snr_max_db: tuple[float, ...] = (35.0,)

    # Protocol thresholds
    gamma_dec_db: float = 30.0
    gamma_drop_db: float = 5.0
    gamma_delta_db: float = 5.0

    # Packets and traffic
    packet_symbols: int = 144
    guard_symbols: int = 16
    offered_traffic: float = 1.0
    ue_area_center_m: tuple[float, float, float] = (0.0, 0.0, 10.0)
    ue_area_size_m: tuple[float, float] = (10.0, 10.0)

    # Simulation control
    horizon_symbols: int = 20000
    episode_symbols: int = 30000
    warmup_symbols: int = 1000
    max_packets_per_point: int = 4000
    min_packet_errors: int = 100
    record_traces: bool = True
    disable_noise: bool = False
    seed: int = 0

    # analyze command
    analyze_snr_max_db: tuple[float, ...] = (35.0,)
    analyze_n: int | None = None
    analyze_init: str = "bootstrap"
    analyze_horizon: int = 40

    # linkbudget command
    linkbudget_distance_m: float = 10.0
    linkbudget_eigen_check: bool = False

    # sweep command
    sweep_traffic: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)

    # ------------------------------------------------------------------
    # Derived quantities
    # ------------------------------------------------------------------

    @property
    def n_bs(self) -> int:
        return self.bs_rows * self.bs_cols

    @property
    def m_scm(self) -> int:
        return self.scm_rows * self.scm_cols

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_PER_S / self.carrier_frequency_hz

    @property
    def spacing_m(self) -> float:
        if self.element_spacing_m is not None:
            return self.element_spacing_m
        return self.wavelength_m / 2.0

    @property
    def tx_power_w(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)

    @property
    def scout_power_w(self) -> float:
        return self.tx_power_w * db_to_linear(self.scout_boost_db)

    @property
    def scm_gain(self) -> float:
        """Backscatter amplitude gain (linear)."""
        return db_to_linear(self.scm_backscatter_gain_db)

    @property
    def bs_element_gain(self) -> float:
        return db_to_linear(self.bs_element_gain_db)

    @property
    def scm_element_gain(self) -> float:
        return db_to_linear(self.scm_element_gain_db)

    @property
    def sigma_eta_sq_w(self) -> float:
        from . import channel

        return channel.noise_variance(self.scm_noise_figure_db, self.bandwidth_hz)

    @property
    def sigma_w_sq_w(self) -> float:
        from . import channel

        return channel.noise_variance(self.bs_noise_figure_db, self.bandwidth_hz)

    @property
    def sigma_sq_w(self) -> float:
        """Decision-stage noise normalization (isotropic approximation)."""
        return self.sigma_w_sq_w

    @property
    def gamma_dec(self) -> float:
        return db_to_linear(self.gamma_dec_db)

    @property
    def gamma_drop(self) -> float:
        return db_to_linear(self.gamma_drop_db)

    @property
    def gamma_delta(self) -> float:
        return db_to_linear(self.gamma_delta_db)

    @property
    def payload_symbols(self) -> int:
        return self.packet_symbols - self.guard_symbols

    @property
    def mean_interarrival_symbols(self) -> float:
        return self.packet_symbols / self.offered_traffic

    def bs_geometry(self):
        from .linalg import PlanarArrayGeometry

        return PlanarArrayGeometry(self.bs_rows, self.bs_cols, self.spacing_m,
                                   self.bs_center_m)

    def scm_geometry(self, center_m: tuple[float, float, float]):
        from .linalg import PlanarArrayGeometry

        return PlanarArrayGeometry(self.scm_rows, self.scm_cols, self.spacing_m,
                                   tuple(float(c) for c in center_m))

    def resolved(self) -> dict[str, Any]:
        """Full key -> value mapping with optional fields filled in."""
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if f.name == "element_spacing_m":
                val = self.spacing_m
            if isinstance(val, tuple):
                val = list(val)
            out[f.name] = val
        return out

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def validate(self) -> "SimConfig":
        positive = [
            "carrier_frequency_hz", "bandwidth_hz", "symbol_time_s",
            "offered_traffic", "delay_spread_s", "linkbudget_distance_m",
        ]
        for key in positive:
            if getattr(self, key) <= 0:
                raise ConfigError(key, "must be > 0")
        for key in ("bs_rows", "bs_cols", "scm_rows", "scm_cols"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be >= 1")
        if self.element_spacing_m is not None and self.element_spacing_m <= 0:
            raise ConfigError("element_spacing_m", "must be > 0 (or null for half-wavelength)")
        if self.channel_type not in CHANNEL_TYPES:
            raise ConfigError("channel_type", f"must be one of {CHANNEL_TYPES}")
        if self.cluster_count < 1:
            raise ConfigError("cluster_count", "must be >= 1")
        if not self.synthetic_snr_max_db:
            raise ConfigError("synthetic_snr_max_db", "must be non-empty")
        if list(self.synthetic_snr_max_db) != sorted(self.synthetic_snr_max_db, reverse=True):
            raise ConfigError("synthetic_snr_max_db", "must be non-increasing")
        if len(self.synthetic_snr_max_db) > min(self.n_bs, self.m_scm):
            raise ConfigError("synthetic_snr_max_db",
                              "rank cannot exceed min(array sizes)")
        if self.gamma_dec_db <= self.gamma_drop_db:
            raise ConfigError("gamma_dec_db", "must exceed gamma_drop_db")
        if self.gamma_delta_db <= 0:
            raise ConfigError("gamma_delta_db", "must be > 0 dB")
        if self.guard_symbols < 0:
            raise ConfigError("guard_symbols", "must be >= 0")
        if self.packet_symbols <= self.guard_symbols:
            raise ConfigError("packet_symbols", "must exceed guard_symbols")
        for key in ("horizon_symbols", "episode_symbols", "warmup_symbols",
                    "analyze_horizon"):
            if getattr(self, key) < 0:
                raise ConfigError(key, "must be >= 0")
        if self.min_packet_errors < 1:
            raise ConfigError("min_packet_errors", "must be >= 1")
        if self.max_packets_per_point < 1:
            raise ConfigError("max_packets_per_point", "must be >= 1")
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not self.analyze_snr_max_db:
            raise ConfigError("analyze_snr_max_db", "must be non-empty")
        if self.analyze_n is not None and self.analyze_n < 1:
            raise ConfigError("analyze_n", "must be >= 1 (or null for the BS array size)")
        if self.analyze_init not in ANALYZE_INITS:
            raise ConfigError("analyze_init", f"must be one of {ANALYZE_INITS}")
        if not self.sweep_traffic or any(g <= 0 for g in self.sweep_traffic):
            raise ConfigError("sweep_traffic", "must be a non-empty list of positive loads")
        if len(tuple(self.ue_area_center_m)) != 3:
            raise ConfigError("ue_area_center_m", "must be a 3-vector in meters")
        if len(tuple(self.ue_area_size_m)) != 2 or any(s < 0 for s in self.ue_area_size_m):
            raise ConfigError("ue_area_size_m", "must be two non-negative extents in meters")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}

_INT_KEYS = {
    "bs_rows", "bs_cols", "scm_rows", "scm_cols", "cluster_count",
    "packet_symbols", "guard_symbols", "horizon_symbols", "episode_symbols",
    "warmup_symbols", "max_packets_per_point", "min_packet_errors", "seed",
    "analyze_n", "analyze_horizon",
}
_BOOL_KEYS = {"record_traces", "disable_noise", "linkbudget_eigen_check"}
_TUPLE_KEYS = {
    "synthetic_snr_max_db", "analyze_snr_max_db", "sweep_traffic",
    "ue_area_center_m", "ue_area_size_m", "bs_center_m",
}
_STR_KEYS = {"channel_type", "analyze_init"}
_OPTIONAL_KEYS = {"element_spacing_m", "analyze_n"}


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        if key in _OPTIONAL_KEYS:
            return None
        raise ConfigError(key, "must not be null")
    if key in _BOOL_KEYS:
        if isinstance(value, bool):
            return value
        raise ConfigError(key, "must be a boolean")
    if key in _STR_KEYS:
        if isinstance(value, str):
            return value
        raise ConfigError(key, "must be a string")
    if key in _TUPLE_KEYS:
        if isinstance(value, (list, tuple)):
            try:
                return tuple(float(v) for v in value)
            except (TypeError, ValueError):
                raise ConfigError(key, "must be a list of numbers") from None
        raise ConfigError(key, "must be a list of numbers")
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, "must be an integer")
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(key, "must be an integer")
        return int(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, "must be a number")
    return float(value)


def config_from_dict(raw: dict[str, Any]) -> SimConfig:
    """Build and validate a SimConfig, rejecting unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key")
        kwargs[key] = _coerce(key, value)
    return SimConfig(**kwargs).validate()


def parse_override(text: str) -> tuple[str, Any]:
    """Parse one ``key=value`` override; value uses JSON syntax when it parses."""
    if "=" not in text:
        raise ConfigError(text, "override must have the form key=value")
    key, _, raw = text.partition("=")
    key = key.strip()
    raw = raw.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(raw: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(raw)
    merged.update(overrides)
    return merged


def load_config(path: str | Path | None,
                overrides: dict[str, Any] | None = None,
                seed: int | None = None) -> SimConfig:
    """Load a JSON config file (empty/missing -> all defaults) and apply overrides."""
    raw: dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text()
        if text.strip():
            parsed = json.loads(text)
            if not isinstance(parsed, dict):
                raise ConfigError("<root>", "config must be a JSON object")
            raw = parsed
    if overrides:
        raw = apply_overrides(raw, overrides)
    if seed is not None:
        raw["seed"] = seed
    return config_from_dict(raw)
