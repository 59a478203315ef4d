"""Recursive particle filter fusing dead reckoning with Wifi observations."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Protocol, Union

import numpy as np

from .errors import ConfigurationError, InsufficientOverlapError, MalformedLogError, ScanSkipped
from .motion import DeadReckoningInput, MotionConfig, Pose, propagate_particles, step_delta, wrap
from .observation import LIKELIHOOD_FLOOR, WifiScan
from .seqmap import Bounds, Point2D

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundTruth:
    timestamp: float
    x: float
    y: float


Measurement = Union[WifiScan, DeadReckoningInput, GroundTruth]


@dataclass(frozen=True)
class Disk:
    center: Point2D
    radius: float


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int = 1000
    # resample when ESS < resample_threshold * N; 1.0 resamples on every scan
    resample_threshold: float = 0.5
    init_region: Union[Bounds, Disk, None] = None
    init_heading_std: float = math.radians(10.0)

    def __post_init__(self):
        if self.n_particles < 1:
            raise ConfigurationError(f"n_particles must be >= 1, got {self.n_particles}")
        if not 0.0 < self.resample_threshold <= 1.0:
            raise ConfigurationError("resample_threshold must lie in (0, 1]")
        if self.init_heading_std < 0:
            raise ConfigurationError("init_heading_std must be non-negative")


class ObservationModel(Protocol):
    def prepare(self, scan: WifiScan): ...

    def evaluate(self, x: np.ndarray, y: np.ndarray, prepared) -> np.ndarray: ...


@dataclass
class Particle:
    pose: Pose
    weight: float


def effective_sample_size(w: np.ndarray) -> float:
    return 1.0 / float(np.sum(w * w))


def systematic_resample(w: np.ndarray, offset: float) -> np.ndarray:
    """Low-variance resampling indices for normalised weights ``w``.

    Pointers sit at ``offset + i / N`` for ``offset`` in [0, 1/N); each lands
    on the first particle whose cumulative weight exceeds it, so zero-weight
    particles are never selected.
    """
    n = w.shape[0]
    cum = np.cumsum(w)
    cum[-1] = 1.0
    pointers = offset + np.arange(n) / n
    idx = np.searchsorted(cum, pointers, side="right")
    return np.minimum(idx, n - 1)


@dataclass
class TrackerEvent:
    timestamp: float
    kind: str  # "skip" or "divergence"
    detail: str = ""


class Tracker:
    """Particle set plus configuration; single owner, mutated in place.

    Args:
        model: observation model with ``prepare(scan)`` and ``evaluate(x, y, prepared)``.
        motion: dead-reckoning noise and step length.
        cfg: particle count, resampling trigger and initial region.
        rng: seeded random source owned by this tracker.
        bounds: fallback init region when ``cfg.init_region`` is None.
        initial_heading: known starting heading; headings are uniform when absent.
    """

    def __init__(
        self,
        model: ObservationModel | None,
        motion: MotionConfig,
        cfg: FilterConfig,
        rng: np.random.Generator,
        bounds: Bounds | None = None,
        initial_heading: float | None = None,
    ):
        self.model = model
        self.motion = motion
        self.cfg = cfg
        self.rng = rng
        self.last_dr: DeadReckoningInput | None = None
        self.last_t = -math.inf
        self.events: list[TrackerEvent] = []

        n = cfg.n_particles
        region = cfg.init_region if cfg.init_region is not None else bounds
        if region is None:
            raise ConfigurationError("no initial region given")
        if isinstance(region, Disk):
            if region.radius < 0:
                raise ConfigurationError("init disk radius must be non-negative")
            r = region.radius * np.sqrt(rng.uniform(0.0, 1.0, n))
            phi = rng.uniform(-math.pi, math.pi, n)
            self.x = region.center[0] + r * np.cos(phi)
            self.y = region.center[1] + r * np.sin(phi)
        else:
            if not (region.width >= 0 and region.height >= 0):
                raise ConfigurationError(f"empty init region {region}")
            self.x = rng.uniform(region.min_x, region.max_x, n)
            self.y = rng.uniform(region.min_y, region.max_y, n)
        if initial_heading is None:
            self.theta = wrap(rng.uniform(-math.pi, math.pi, n))
        else:
            self.theta = wrap(initial_heading + rng.normal(0.0, cfg.init_heading_std, n))
        self.w = np.full(n, 1.0 / n)

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def particles(self) -> list[Particle]:
        return [Particle(Pose(*p[:3]), p[3]) for p in zip(self.x, self.y, self.theta, self.w)]

    def advance_clock(self, t: float) -> None:
        if t < self.last_t:
            raise MalformedLogError(f"measurement at t={t} precedes t={self.last_t}")
        self.last_t = t

    def predict(self, u: DeadReckoningInput) -> None:
        self.advance_clock(u.timestamp)
        if self.last_dr is None:
            self.last_dr = u
            return
        dc, dalpha = step_delta(self.last_dr, u)
        self.x, self.y, self.theta = propagate_particles(
            self.x, self.y, self.theta, dc, dalpha, self.motion, self.rng
        )
        self.last_dr = u

    def diffuse(self, sigma: float, timestamp: float) -> None:
        """Zero-mean Gaussian random walk on position (motion prior without IMU)."""
        self.advance_clock(timestamp)
        n = len(self)
        self.x = self.x + self.rng.normal(0.0, sigma, n)
        self.y = self.y + self.rng.normal(0.0, sigma, n)

    def correct(self, scan: WifiScan) -> bool:
        """Reweight by the observation likelihood. Returns False when the scan is skipped."""
        self.advance_clock(scan.timestamp)
        if self.model is None:
            raise ConfigurationError("tracker has no observation model")
        try:
            prepared = self.model.prepare(scan)
        except (ScanSkipped, InsufficientOverlapError) as exc:
            self.events.append(TrackerEvent(scan.timestamp, "skip", str(exc)))
            return False
        lik = self.model.evaluate(self.x, self.y, prepared)
        w = self.w * lik
        total = float(np.sum(w))
        if np.all(lik <= LIKELIHOOD_FLOOR) or not total > 0 or not math.isfinite(total):
            log.debug("all particle likelihoods at floor at t=%s; resetting weights", scan.timestamp)
            self.events.append(TrackerEvent(scan.timestamp, "divergence"))
            self.w = np.full(len(self), 1.0 / len(self))
            return True
        self.w = w / total
        return True

    def ess(self) -> float:
        return effective_sample_size(self.w)

    def resample(self, offset: float | None = None) -> bool:
        """Systematic resampling when ESS falls below the threshold. Returns True if it ran."""
        n = len(self)
        if self.ess() >= self.cfg.resample_threshold * n:
            return False
        if offset is None:
            offset = self.rng.uniform(0.0, 1.0 / n)
        idx = systematic_resample(self.w, offset)
        self.x, self.y, self.theta = self.x[idx], self.y[idx], self.theta[idx]
        self.w = np.full(n, 1.0 / n)
        return True

    def estimate(self) -> Pose:
        w = self.w
        x = float(np.sum(w * self.x))
        y = float(np.sum(w * self.y))
        th = math.atan2(float(np.sum(w * np.sin(self.theta))), float(np.sum(w * np.cos(self.theta))))
        return Pose(x, y, wrap(th))

    def step(self, m: Measurement) -> Pose | None:
        """Process one record; returns the estimate after STEP/WIFI, None for GT."""
        if isinstance(m, DeadReckoningInput):
            self.predict(m)
            return self.estimate()
        if isinstance(m, WifiScan):
            if self.correct(m):
                est = self.estimate()
                self.resample()
                return est
            return self.estimate()
        if isinstance(m, GroundTruth):
            return None
        raise MalformedLogError(f"unknown measurement type {type(m).__name__}")
