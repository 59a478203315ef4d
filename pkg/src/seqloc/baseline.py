"""Surveyed RSS fingerprints scored by cosine similarity (comparison baseline).

Uses the same WKNN kernel as the sequence model, so the two differ only in
how the reference map is built and how similarity is measured.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InsufficientOverlapError, ScanSkipped
from .motion import Pose
from .observation import Neighbors, ObservationConfig, WifiScan, wknn_kernel
from .seqmap import Point2D
from .similarity import cosine_against_matrix
from .simulator import Scenario, scan_at


@dataclass(frozen=True, eq=False)
class RssFingerprintMap:
    locations: np.ndarray  # (P, 2)
    fingerprints: tuple[dict[int, float], ...]
    duration_s: float | None = None

    def __len__(self) -> int:
        return len(self.fingerprints)

    @property
    def ap_ids(self) -> list[int]:
        return sorted({ap for f in self.fingerprints for ap in f})

    def matrix(self) -> tuple[np.ndarray, dict[int, int]]:
        """Dense (P, A) dBm matrix with NaN for unheard APs, plus id -> column."""
        col = {ap: i for i, ap in enumerate(self.ap_ids)}
        m = np.full((len(self), len(col)), np.nan)
        for r, f in enumerate(self.fingerprints):
            for ap, v in f.items():
                m[r, col[ap]] = v
        return m, col

    def to_list(self) -> list[dict]:
        return [
            {"x": float(p[0]), "y": float(p[1]), "rss": {str(k): v for k, v in sorted(f.items())}}
            for p, f in zip(self.locations, self.fingerprints)
        ]

    @classmethod
    def from_list(cls, items: list[dict]) -> "RssFingerprintMap":
        try:
            locs = np.array([[it["x"], it["y"]] for it in items], dtype=float).reshape(-1, 2)
            fps = tuple({int(k): float(v) for k, v in it["rss"].items()} for it in items)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed fingerprint survey: {exc!r}") from exc
        if not fps:
            raise ConfigurationError("fingerprint survey is empty")
        return cls(locs, fps)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_list(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RssFingerprintMap":
        return cls.from_list(json.loads(Path(path).read_text(encoding="utf-8")))


def survey(scenario: Scenario, points: Sequence[Sequence[float]], duration_s: float, seed: int | None = None) -> RssFingerprintMap:
    """Simulate a stationary dwell at each point and average the scans per AP.

    The number of scans per point is ``round(duration_s * wifi_rate_hz)``.
    """
    if len(points) == 0:
        raise ConfigurationError("no survey points")
    for p in points:
        if not scenario.bounds.contains(p):
            raise ConfigurationError(f"survey point {tuple(p)} outside bounds")
    n_scans = max(1, int(round(duration_s * scenario.wifi_rate_hz)))
    # separate stream from the walk generated with the same scenario seed
    rng = np.random.default_rng([scenario.seed if seed is None else seed, 1])
    fps = []
    for p in points:
        scans = [scan_at(scenario.aps, p, scenario.path_loss, rng) for _ in range(n_scans)]
        mean = {}
        for ap in scans[0]:
            v = np.array([s[ap] for s in scans])
            # shifted mean: exact when every sample is equal
            mean[ap] = float(v[0] + np.mean(v - v[0]))
        fps.append(mean)
    return RssFingerprintMap(np.asarray(points, dtype=float).reshape(-1, 2), tuple(fps), float(duration_s))


def default_survey_points(scenario: Scenario, n: int = 41) -> list[Point2D]:
    """``n`` survey locations spread over the whole floor.

    A ``cols x rows`` lattice of tile centres matching the floor's aspect ratio,
    topped up with centres of the lattice's interior (dual) tiles until ``n``
    points are reached.
    """
    b = scenario.bounds
    cols = max(1, int(round(math.sqrt(n * b.width / b.height))))
    rows = max(1, n // cols)
    dx, dy = b.width / cols, b.height / rows
    pts = [Point2D(b.min_x + dx * (i + 0.5), b.min_y + dy * (j + 0.5)) for j in range(rows) for i in range(cols)]
    dual = [Point2D(b.min_x + dx * (i + 1), b.min_y + dy * (j + 1)) for j in range(rows - 1) for i in range(cols - 1)]
    # spread the extra points instead of filling the first dual row
    step = max(1, len(dual) // max(1, n - len(pts)))
    pts.extend(dual[::step][: n - len(pts)])
    return pts[:n]


class CosineObservationModel:
    def __init__(self, fpmap: RssFingerprintMap, cfg: ObservationConfig):
        self.map = fpmap
        self.cfg = cfg
        self._matrix, self._col = fpmap.matrix()

    def prepare(self, scan: WifiScan) -> Neighbors:
        known = {ap: v for ap, v in scan.readings.items() if ap in self._col}
        if len(known) < self.cfg.min_common_aps:
            raise ScanSkipped(f"scan at t={scan.timestamp} shares {len(known)} APs with the survey")
        vec = np.full(len(self._col), np.nan)
        for ap, v in known.items():
            vec[self._col[ap]] = v
        cos = cosine_against_matrix(vec, self._matrix)
        valid = np.flatnonzero(~np.isnan(cos))
        if valid.size == 0:
            raise InsufficientOverlapError("scan overlaps no fingerprint")
        order = valid[np.argsort(-cos[valid], kind="stable")][: self.cfg.k]
        return Neighbors(order, self.map.locations[order], cos[order])

    def evaluate(self, x: np.ndarray, y: np.ndarray, nb: Neighbors) -> np.ndarray:
        return wknn_kernel(x, y, nb, self.cfg.lam)


def likelihood_cos(pose: Pose, scan: WifiScan, fpmap: RssFingerprintMap, cfg: ObservationConfig) -> float:
    """Cosine-WKNN likelihood of ``scan`` at ``pose``; heading is ignored."""
    model = CosineObservationModel(fpmap, cfg)
    nb = model.prepare(scan)
    return float(model.evaluate(np.array([pose.x]), np.array([pose.y]), nb)[0])
