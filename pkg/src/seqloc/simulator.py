"""Synthetic world: AP deployment, a walked path, and the sensor streams it produces.

RSS follows a log-distance path-loss model with Gaussian shadowing. Steps are
emitted on a cadence clock, so the walker advances exactly one stride
(``speed_mps / step_cadence_hz``) between consecutive steps. The heading in a
STEP record is the direction of the stride that starts at that record.

All default constants live in this module (see ``DEFAULT_*`` below and
:func:`default_scenario`).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .motion import DeadReckoningInput, wrap
from .observation import WifiScan
from .seqmap import AccessPoint, Bounds, Point2D
from .tracker import GroundTruth, Measurement

RSS_MIN_DBM = -100.0
RSS_MAX_DBM = -20.0
MIN_DISTANCE_M = 0.1

# 25 m x 14 m office with nine APs spread along the walls
DEFAULT_BOUNDS = Bounds(0.0, 0.0, 25.0, 14.0)
DEFAULT_AP_POSITIONS = [
    (2.0, 0.0), (10.7, 0.0), (19.3, 0.0), (25.0, 3.0), (25.0, 11.7),
    (18.7, 14.0), (10.0, 14.0), (1.3, 14.0), (0.0, 6.7),
]
# rectangle walk; 21.0 m and 9.8 m sides are whole multiples of the 0.7 m stride
DEFAULT_LOOP = (2.0, 2.1, 23.0, 11.9)
DEFAULT_LAPS = 10.5
# one stride per second, so every Wifi scan coincides with a step event
DEFAULT_SPEED_MPS = 0.7
DEFAULT_STRIDE_M = 0.7
DEFAULT_WIFI_RATE_HZ = 0.5


@dataclass(frozen=True)
class PathLoss:
    p0_dbm: float = -40.0  # RSS at 1 m
    gamma: float = 2.5
    sigma_shadow_db: float = 6.0


@dataclass(frozen=True)
class ImuNoise:
    step_count_miss_prob: float = 0.02
    # heading drift accumulated per step taken (gyro-style), radians
    heading_bias_rad: float = 0.001
    # independent error on every reported heading, radians
    heading_noise_rad: float = 0.05


@dataclass(frozen=True)
class Scenario:
    bounds: Bounds
    aps: tuple[AccessPoint, ...]
    path: tuple[Point2D, ...]
    speed_mps: float = DEFAULT_SPEED_MPS
    wifi_rate_hz: float = DEFAULT_WIFI_RATE_HZ
    step_cadence_hz: float = DEFAULT_SPEED_MPS / DEFAULT_STRIDE_M
    path_loss: PathLoss = field(default_factory=PathLoss)
    imu_noise: ImuNoise = field(default_factory=ImuNoise)
    seed: int = 0

    def __post_init__(self):
        if not (self.speed_mps > 0 and self.wifi_rate_hz > 0 and self.step_cadence_hz > 0):
            raise ConfigurationError("speed and rates must be positive")
        if not self.path_loss.gamma > 0:
            raise ConfigurationError("path-loss exponent must be positive")
        if len(self.path) < 2:
            raise ConfigurationError("path needs at least two waypoints")
        for p in self.path:
            if not self.bounds.contains(p):
                raise ConfigurationError(f"waypoint {tuple(p)} outside bounds")
        if not 0.0 <= self.imu_noise.step_count_miss_prob < 1.0:
            raise ConfigurationError("step_count_miss_prob must lie in [0, 1)")

    @property
    def stride_m(self) -> float:
        return self.speed_mps / self.step_cadence_hz

    @property
    def path_length(self) -> float:
        p = np.asarray(self.path)
        return float(np.sum(np.hypot(*np.diff(p, axis=0).T)))

    def noiseless(self) -> "Scenario":
        return replace(
            self,
            path_loss=replace(self.path_loss, sigma_shadow_db=0.0),
            imu_noise=ImuNoise(0.0, 0.0, 0.0),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["aps"] = [{"id": ap.id, "x": ap.position.x, "y": ap.position.y} for ap in self.aps]
        d["path"] = [[p.x, p.y] for p in self.path]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            return cls(
                bounds=Bounds(**d["bounds"]),
                aps=tuple(AccessPoint(int(a["id"]), Point2D(a["x"], a["y"])) for a in d["aps"]),
                path=tuple(Point2D(float(x), float(y)) for x, y in d["path"]),
                speed_mps=float(d.get("speed_mps", DEFAULT_SPEED_MPS)),
                wifi_rate_hz=float(d.get("wifi_rate_hz", DEFAULT_WIFI_RATE_HZ)),
                step_cadence_hz=float(d.get("step_cadence_hz", DEFAULT_SPEED_MPS / DEFAULT_STRIDE_M)),
                path_loss=PathLoss(**d.get("path_loss", {})),
                imu_noise=ImuNoise(**d.get("imu_noise", {})),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed scenario: {exc!r}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def rectangle_loop(x0: float, y0: float, x1: float, y1: float, laps: float = 1.0) -> tuple[Point2D, ...]:
    """Counter-clockwise rectangle walk starting at (x0, y0); fractional laps stop at a corner."""
    corners = [Point2D(x1, y0), Point2D(x1, y1), Point2D(x0, y1), Point2D(x0, y0)]
    n_sides = int(round(laps * 4))
    if n_sides < 1:
        raise ConfigurationError("need at least one side")
    return (Point2D(x0, y0),) + tuple(corners[i % 4] for i in range(n_sides))


def default_aps() -> tuple[AccessPoint, ...]:
    return tuple(AccessPoint(i + 1, Point2D(*xy)) for i, xy in enumerate(DEFAULT_AP_POSITIONS))


def default_scenario(seed: int = 0, **overrides) -> Scenario:
    s = Scenario(DEFAULT_BOUNDS, default_aps(), rectangle_loop(*DEFAULT_LOOP, DEFAULT_LAPS), seed=seed)
    return replace(s, **overrides) if overrides else s


def rss_at(
    ap: AccessPoint, p: Sequence[float], pl: PathLoss, rng: np.random.Generator | None = None
) -> float:
    """Log-distance RSS in dBm, with shadowing drawn from ``rng`` when sigma > 0."""
    d = max(math.hypot(ap.position.x - p[0], ap.position.y - p[1]), MIN_DISTANCE_M)
    rss = pl.p0_dbm - 10.0 * pl.gamma * math.log10(d / 1.0)
    if pl.sigma_shadow_db > 0:
        if rng is None:
            raise ConfigurationError("shadowing requires a random source")
        rss += rng.normal(0.0, pl.sigma_shadow_db)
    return min(RSS_MAX_DBM, max(RSS_MIN_DBM, rss))


def scan_at(
    aps: Sequence[AccessPoint], p: Sequence[float], pl: PathLoss, rng: np.random.Generator
) -> dict[int, float]:
    return {ap.id: rss_at(ap, p, pl, rng) for ap in aps}


class _Polyline:
    def __init__(self, pts: Sequence[Point2D]):
        self.pts = np.asarray(pts, dtype=float)
        seg = np.diff(self.pts, axis=0)
        self.seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(self.seg_len == 0):
            raise ConfigurationError("path has repeated waypoints")
        self.cum = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self.length = float(self.cum[-1])
        self.heading = np.arctan2(seg[:, 1], seg[:, 0])

    def _segment(self, s: float) -> int:
        return int(min(max(np.searchsorted(self.cum, s, side="right") - 1, 0), len(self.seg_len) - 1))

    def point(self, s: float) -> tuple[float, float]:
        s = min(max(s, 0.0), self.length)
        i = self._segment(s)
        f = (s - self.cum[i]) / self.seg_len[i]
        p = self.pts[i] + f * (self.pts[i + 1] - self.pts[i])
        return float(p[0]), float(p[1])

    def direction(self, s: float) -> float:
        # direction of travel just after arc length s (corner steps take the new side)
        return float(self.heading[self._segment(s + 1e-9)])


def generate(s: Scenario) -> list[Measurement]:
    """Simulate one walk and return the merged, time-ordered measurement log."""
    line = _Polyline(s.path)
    rng = np.random.default_rng(s.seed)
    duration = line.length / s.speed_mps
    noise = s.imu_noise

    steps: list[DeadReckoningInput] = []
    count = 0
    for k in range(int(math.floor(duration * s.step_cadence_hz + 1e-9)) + 1):
        t = k / s.step_cadence_hz
        if k > 0:
            if rng.random() < noise.step_count_miss_prob:
                continue
            count += 1
        heading = line.direction(s.speed_mps * t) + noise.heading_bias_rad * k
        if noise.heading_noise_rad > 0:
            heading += rng.normal(0.0, noise.heading_noise_rad)
        steps.append(DeadReckoningInput(t, count, wrap(heading)))

    scans: list[WifiScan] = []
    for j in range(int(math.floor(duration * s.wifi_rate_hz + 1e-9)) + 1):
        t = j / s.wifi_rate_hz
        scans.append(WifiScan(t, scan_at(s.aps, line.point(s.speed_mps * t), s.path_loss, rng)))

    times = sorted({m.timestamp for m in steps} | {m.timestamp for m in scans})
    gts = [GroundTruth(t, *line.point(s.speed_mps * t)) for t in times]

    order = {GroundTruth: 0, DeadReckoningInput: 1, WifiScan: 2}
    merged: list[Measurement] = [*gts, *steps, *scans]
    merged.sort(key=lambda m: (m.timestamp, order[type(m)]))
    return merged


def decimate(records: Sequence[Measurement], keep_every: int) -> list[Measurement]:
    """Keep every ``keep_every``-th WIFI record (starting with the first) and all others."""
    if keep_every < 1:
        raise ConfigurationError(f"keep_every must be >= 1, got {keep_every}")
    out = []
    i = 0
    for m in records:
        if isinstance(m, WifiScan):
            if i % keep_every == 0:
                out.append(m)
            i += 1
        else:
            out.append(m)
    return out
