"""Flat ``key = value`` configuration shared by the CLI, runs and sweeps.

Lines starting with ``#`` are comments. Tracker keys map onto
:class:`TrackConfig`; scenario keys (``speed_mps``, ``sigma_shadow_db``, ...)
override the default simulated world.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping

from .errors import ConfigurationError
from .motion import MotionConfig
from .observation import ObservationConfig
from .simulator import DEFAULT_LOOP, Scenario, rectangle_loop
from .tracker import Disk, FilterConfig

MODES = ("fused", "wifi", "imu", "baseline")


@dataclass(frozen=True)
class TrackConfig:
    mode: str = "fused"
    # filter
    n_particles: int = 1000
    resample_threshold: float = 0.5
    init_radius: float = 1.0
    init_heading_std: float = math.radians(10.0)
    # observation
    k: int = 4
    lam: float = 0.01
    min_common_aps: int = 3
    grid_size: float = 2.0
    # motion
    step_length_m: float = 0.7
    sigma_d: float = 0.4
    sigma_theta: float = 0.01
    # lets the particle headings follow gyro-style drift that turn-scaled noise cannot
    heading_noise_additive: float = 0.01
    independent_xy_noise: bool = False
    # wifi-only random walk, metres per scan
    wifi_rw_sigma: float = 0.5
    wifi_keep_every: int = 1
    # cosine baseline survey
    survey_points: int = 41
    survey_duration_s: float = 180.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.wifi_keep_every < 1:
            raise ConfigurationError("wifi_keep_every must be >= 1")
        if self.wifi_rw_sigma < 0 or self.init_radius < 0:
            raise ConfigurationError("wifi_rw_sigma and init_radius must be non-negative")

    def motion(self) -> MotionConfig:
        return MotionConfig(
            self.step_length_m, self.sigma_d, self.sigma_theta,
            self.heading_noise_additive, self.independent_xy_noise,
        )

    def observation(self) -> ObservationConfig:
        return ObservationConfig(self.k, self.lam, self.min_common_aps)

    def filter(self, init_region: Disk | None = None) -> FilterConfig:
        return FilterConfig(self.n_particles, self.resample_threshold, init_region, self.init_heading_std)


# config-file spelling -> TrackConfig field
ALIASES = {"lambda": "lam", "step_length": "step_length_m"}

SCENARIO_KEYS = {
    "speed_mps": float, "wifi_rate_hz": float, "step_cadence_hz": float,
    "p0_dbm": float, "gamma": float, "sigma_shadow_db": float,
    "step_count_miss_prob": float, "heading_bias_rad": float, "heading_noise_rad": float,
    "laps": float, "seed": int,
}

_TRACK_TYPES = {f.name: f.type for f in fields(TrackConfig)}


def _coerce(raw: str, typ: str, key: str):
    try:
        if typ == "bool":
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key!r}: {raw!r}") from exc


def parse_config(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def load_config(path: str | Path) -> dict[str, str]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def split_config(raw: Mapping[str, str], base: TrackConfig | None = None) -> tuple[TrackConfig, dict]:
    """Turn raw key/value strings into a TrackConfig plus typed scenario overrides."""
    track = {}
    scen = {}
    for key, value in raw.items():
        name = ALIASES.get(key, key)
        if name in _TRACK_TYPES:
            track[name] = _coerce(value, str(_TRACK_TYPES[name]), key)
        elif key in SCENARIO_KEYS:
            scen[key] = SCENARIO_KEYS[key](value)
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    return replace(base or TrackConfig(), **track), scen


def apply_scenario_overrides(s: Scenario, over: Mapping[str, float]) -> Scenario:
    over = dict(over)
    pl = {k: over.pop(k) for k in ("p0_dbm", "gamma", "sigma_shadow_db") if k in over}
    imu = {k: over.pop(k) for k in ("step_count_miss_prob", "heading_bias_rad", "heading_noise_rad") if k in over}
    if "laps" in over:
        over["path"] = rectangle_loop(*DEFAULT_LOOP, over.pop("laps"))
    return replace(
        s,
        path_loss=replace(s.path_loss, **pl) if pl else s.path_loss,
        imu_noise=replace(s.imu_noise, **imu) if imu else s.imu_noise,
        **over,
    )


def dump_config(cfg: TrackConfig) -> str:
    lines = []
    for f in fields(cfg):
        key = "lambda" if f.name == "lam" else f.name
        v = getattr(cfg, f.name)
        lines.append(f"{key} = {str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"

