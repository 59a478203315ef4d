"""Pedestrian dead-reckoning motion model.

Poses move ``step_length * delta_steps`` along their *previous* heading, with
the displacement scaled by ``1 + N(0, sigma_d^2)``; the heading then turns by
the wrapped heading delta scaled by ``1 + N(0, sigma_theta^2)``. Both noise
terms are multiplicative, so a standing user stays put and a straight walk
keeps its heading.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, MalformedLogError

TWO_PI = 2.0 * math.pi


class Pose(NamedTuple):
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class DeadReckoningInput:
    """One STEP record: cumulative step count and absolute heading (radians)."""

    timestamp: float
    step_count: int
    heading: float


@dataclass(frozen=True)
class MotionConfig:
    step_length_m: float = 0.7
    sigma_d: float = 0.4
    sigma_theta: float = 0.01
    # optional extra additive heading noise per update (radians), off by default
    heading_noise_additive: float = 0.0
    # draw separate distance-noise terms for x and y instead of one shared draw
    independent_xy_noise: bool = False

    def __post_init__(self):
        if not self.step_length_m > 0:
            raise ConfigurationError(f"step_length_m must be positive, got {self.step_length_m}")
        for name in ("sigma_d", "sigma_theta", "heading_noise_additive"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")


def wrap(angle):
    """Map an angle (scalar or array) into (-pi, pi]; in-range values pass through unchanged."""
    a = np.asarray(angle, dtype=float)
    out = a - TWO_PI * np.ceil((a - math.pi) / TWO_PI)
    out = np.where(out <= -math.pi, out + TWO_PI, out)
    out = np.where(out > math.pi, out - TWO_PI, out)
    if out.ndim == 0:
        return float(out)
    return out


def step_delta(prev: DeadReckoningInput, cur: DeadReckoningInput) -> tuple[int, float]:
    """(delta steps, wrapped delta heading) between two consecutive STEP records."""
    dc = cur.step_count - prev.step_count
    if dc < 0:
        raise MalformedLogError(
            f"step count decreased from {prev.step_count} to {cur.step_count} at t={cur.timestamp}"
        )
    return dc, wrap(cur.heading - prev.heading)


def propagate_particles(
    x: np.ndarray,
    y: np.ndarray,
    theta: np.ndarray,
    dc: int,
    dalpha: float,
    cfg: MotionConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised motion update with an independent noise draw per particle."""
    n = x.shape[0]
    if cfg.independent_xy_noise:
        ex = rng.normal(0.0, cfg.sigma_d, n)
        ey = rng.normal(0.0, cfg.sigma_d, n)
    else:
        ex = ey = rng.normal(0.0, cfg.sigma_d, n)
    et = rng.normal(0.0, cfg.sigma_theta, n)
    dist = cfg.step_length_m * dc
    x_new = x + dist * np.cos(theta) * (1.0 + ex)
    y_new = y + dist * np.sin(theta) * (1.0 + ey)
    turn = dalpha * (1.0 + et)
    if cfg.heading_noise_additive > 0:
        turn = turn + rng.normal(0.0, cfg.heading_noise_additive, n)
    return x_new, y_new, wrap(theta + turn)


def propagate(
    p: Pose,
    prev: DeadReckoningInput,
    cur: DeadReckoningInput,
    cfg: MotionConfig,
    rng: np.random.Generator,
) -> Pose:
    """Propagate a single pose between two STEP records."""
    dc, dalpha = step_delta(prev, cur)
    x, y, th = propagate_particles(
        np.array([p.x]), np.array([p.y]), np.array([p.theta]), dc, dalpha, cfg, rng
    )
    return Pose(float(x[0]), float(y[0]), float(th[0]))
