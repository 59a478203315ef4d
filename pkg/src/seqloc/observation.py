"""Wifi observation model: RSS sequences and the WKNN likelihood.

For each scan the ``k`` map cells whose location sequences best match the
scan's RSS sequence are selected once; every particle is then scored by a
similarity-weighted sum of Gaussian kernels centred on those cells' anchors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ScanSkipped
from .motion import Pose
from .seqmap import FingerprintMap, nearest_cells

# keeps a very narrow kernel from zeroing every particle weight
LIKELIHOOD_FLOOR = 1e-300


@dataclass(frozen=True)
class WifiScan:
    timestamp: float
    readings: Mapping[int, float]


@dataclass(frozen=True)
class ObservationConfig:
    k: int = 4
    lam: float = 0.01
    min_common_aps: int = 3

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if not self.lam > 0:
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")
        if self.min_common_aps < 2:
            raise ConfigurationError("min_common_aps must be >= 2")


@dataclass(frozen=True)
class Neighbors:
    """Per-scan top-k reference set shared read-only by all particles."""

    indices: np.ndarray
    anchors: np.ndarray  # (k, 2)
    weights: np.ndarray  # similarity of each neighbour


def rss_sequence(scan: WifiScan, min_readings: int = 2) -> tuple[int, ...]:
    """AP ids ordered by RSS, strongest first; equal readings by ascending id."""
    if len(scan.readings) < max(2, min_readings):
        raise ScanSkipped(
            f"scan at t={scan.timestamp} has {len(scan.readings)} readings, need {max(2, min_readings)}"
        )
    return tuple(ap for ap, _ in sorted(scan.readings.items(), key=lambda kv: (-kv[1], kv[0])))


def wknn_kernel(x: np.ndarray, y: np.ndarray, nb: Neighbors, lam: float) -> np.ndarray:
    """Sum over neighbours of ``weight * exp(-0.5 * d2 / lam)``, floored."""
    dx = x[:, None] - nb.anchors[None, :, 0]
    dy = y[:, None] - nb.anchors[None, :, 1]
    d2 = (dx * dx) / lam + (dy * dy) / lam
    out = np.exp(-0.5 * d2) @ nb.weights
    return np.maximum(out, LIKELIHOOD_FLOOR)


def select_neighbors(seq: Sequence[int], fmap: FingerprintMap, k: int) -> Neighbors:
    top = nearest_cells(fmap, seq, min(k, len(fmap)))
    idx = np.array([c.index for c, _ in top], dtype=np.int64)
    return Neighbors(idx, fmap.anchors[idx], np.array([s for _, s in top], dtype=float))


def likelihood(pose: Pose, seq: Sequence[int], fmap: FingerprintMap, cfg: ObservationConfig) -> float:
    """Unnormalised p(seq | pose, map) for one pose. Heading is ignored."""
    nb = select_neighbors(seq, fmap, cfg.k)
    return float(wknn_kernel(np.array([pose.x]), np.array([pose.y]), nb, cfg.lam)[0])


class SequenceObservationModel:
    """Rank-similarity observation model over a :class:`FingerprintMap`."""

    def __init__(self, fmap: FingerprintMap, cfg: ObservationConfig):
        self.map = fmap
        self.cfg = cfg

    def prepare(self, scan: WifiScan) -> Neighbors:
        """Select the shared neighbour set for a scan.

        Raises ScanSkipped or InsufficientOverlapError when the scan cannot be used.
        """
        seq = rss_sequence(scan, self.cfg.min_common_aps)
        known = [ap for ap in seq if ap in self.map.column_of]
        if len(known) < self.cfg.min_common_aps:
            raise ScanSkipped(f"scan at t={scan.timestamp} shares {len(known)} APs with the map")
        return select_neighbors(known, self.map, self.cfg.k)

    def evaluate(self, x: np.ndarray, y: np.ndarray, nb: Neighbors) -> np.ndarray:
        return wknn_kernel(x, y, nb, self.cfg.lam)
