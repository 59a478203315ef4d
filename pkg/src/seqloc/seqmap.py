"""Training-free fingerprint map built from known AP positions.

Each grid cell is fingerprinted by its *location sequence*: AP ids ordered by
straight-line distance from the cell centroid, nearest first.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, InsufficientOverlapError
from .similarity import align, sim_against_ranks


class Point2D(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class AccessPoint:
    id: int
    position: Point2D

    def __post_init__(self):
        if self.id < 1:
            raise ConfigurationError(f"AP id must be a positive integer, got {self.id}")
        object.__setattr__(self, "position", Point2D(float(self.position[0]), float(self.position[1])))


@dataclass(frozen=True)
class Bounds:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    def contains(self, p: Sequence[float]) -> bool:
        return self.min_x <= p[0] <= self.max_x and self.min_y <= p[1] <= self.max_y


class Cell(NamedTuple):
    index: int
    anchor: Point2D
    sequence: tuple[int, ...]


def _check_aps(aps: Sequence[AccessPoint]) -> None:
    if len(aps) < 2:
        raise ConfigurationError(f"need at least 2 access points, got {len(aps)}")
    ids = [ap.id for ap in aps]
    if len(set(ids)) != len(ids):
        raise ConfigurationError(f"duplicate AP ids: {ids}")


def location_sequence(p: Sequence[float], aps: Sequence[AccessPoint]) -> tuple[int, ...]:
    """AP ids sorted by distance from ``p``, ascending; equal distances by id."""
    _check_aps(aps)
    px, py = float(p[0]), float(p[1])
    if not (math.isfinite(px) and math.isfinite(py)):
        raise ConfigurationError(f"non-finite point {p}")
    keyed = sorted((math.hypot(ap.position.x - px, ap.position.y - py), ap.id) for ap in aps)
    return tuple(ap_id for _, ap_id in keyed)


def _tile_count(extent: float, grid_size: float) -> int:
    # tolerate float noise such as 14 / 0.7 = 20.000000000000004
    return max(0, math.ceil(extent / grid_size - 1e-9))


@dataclass(frozen=True, eq=False)
class FingerprintMap:
    """Immutable grid of (anchor, location sequence) fingerprints.

    Cells are indexed row-major from the minimum corner: index ``row * ncols + col``
    with rows along y.
    """

    bounds: Bounds
    grid_size: float
    aps: tuple[AccessPoint, ...]
    anchors: np.ndarray = field(repr=False)
    sequences: tuple[tuple[int, ...], ...] = field(repr=False)
    ncols: int = 0
    nrows: int = 0

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def cells(self) -> list[Cell]:
        return [Cell(i, Point2D(*self.anchors[i]), s) for i, s in enumerate(self.sequences)]

    def cell(self, index: int) -> Cell:
        return Cell(index, Point2D(*self.anchors[index]), self.sequences[index])

    @cached_property
    def column_of(self) -> dict[int, int]:
        """AP id -> column in :attr:`ranks` (ascending id order)."""
        return {ap_id: c for c, ap_id in enumerate(sorted(ap.id for ap in self.aps))}

    @cached_property
    def ranks(self) -> np.ndarray:
        """``ranks[m, c]``: position of AP column ``c`` in cell ``m``'s sequence."""
        out = np.empty((len(self.sequences), len(self.aps)), dtype=np.int64)
        col = self.column_of
        for m, seq in enumerate(self.sequences):
            for pos, ap_id in enumerate(seq):
                out[m, col[ap_id]] = pos
        out.setflags(write=False)
        return out

    def cell_index(self, p: Sequence[float]) -> int:
        """Index of the cell containing ``p`` (points on the max edges go to the last tile)."""
        if not self.bounds.contains(p):
            raise ConfigurationError(f"point {tuple(p)} outside map bounds")
        col = min(int((p[0] - self.bounds.min_x) // self.grid_size), self.ncols - 1)
        row = min(int((p[1] - self.bounds.min_y) // self.grid_size), self.nrows - 1)
        return row * self.ncols + col

    def to_dict(self) -> dict:
        b = self.bounds
        return {
            "aps": [{"id": ap.id, "x": ap.position.x, "y": ap.position.y} for ap in self.aps],
            "bounds": {"min_x": b.min_x, "min_y": b.min_y, "max_x": b.max_x, "max_y": b.max_y},
            "grid_size": self.grid_size,
            "cells": [
                {"cx": float(a[0]), "cy": float(a[1]), "sequence": list(s)}
                for a, s in zip(self.anchors, self.sequences)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FingerprintMap":
        try:
            aps = tuple(AccessPoint(int(a["id"]), Point2D(a["x"], a["y"])) for a in d["aps"])
            bounds = Bounds(**{k: float(d["bounds"][k]) for k in ("min_x", "min_y", "max_x", "max_y")})
            grid_size = float(d["grid_size"])
            anchors = np.array([[c["cx"], c["cy"]] for c in d["cells"]], dtype=float).reshape(-1, 2)
            sequences = tuple(tuple(int(i) for i in c["sequence"]) for c in d["cells"])
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed map document: {exc!r}") from exc
        _check_aps(aps)
        ids = {ap.id for ap in aps}
        for s in sequences:
            if len(s) != len(aps) or set(s) != ids:
                raise ConfigurationError(f"cell sequence {s} is not a permutation of the AP ids")
        anchors.setflags(write=False)
        return cls(
            bounds, grid_size, aps, anchors, sequences,
            ncols=_tile_count(bounds.width, grid_size), nrows=_tile_count(bounds.height, grid_size),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FingerprintMap":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_map(bounds: Bounds, grid_size: float, aps: Iterable[AccessPoint]) -> FingerprintMap:
    """Tile ``bounds`` with square cells and fingerprint each by its centroid.

    Tiles cut by the max edges keep their true (clipped) centroid.
    """
    aps = tuple(aps)
    _check_aps(aps)
    if not grid_size > 0:
        raise ConfigurationError(f"grid_size must be positive, got {grid_size}")
    if not (bounds.width > 0 and bounds.height > 0):
        raise ConfigurationError(f"degenerate bounds {bounds}")
    ncols = _tile_count(bounds.width, grid_size)
    nrows = _tile_count(bounds.height, grid_size)
    if ncols * nrows == 0:
        raise ConfigurationError("grid produces zero cells")

    xs0 = bounds.min_x + grid_size * np.arange(ncols)
    xs1 = np.minimum(xs0 + grid_size, bounds.max_x)
    ys0 = bounds.min_y + grid_size * np.arange(nrows)
    ys1 = np.minimum(ys0 + grid_size, bounds.max_y)
    cx = (xs0 + xs1) / 2.0
    cy = (ys0 + ys1) / 2.0
    anchors = np.array([[x, y] for y in cy for x in cx], dtype=float)
    anchors.setflags(write=False)
    sequences = tuple(location_sequence(a, aps) for a in anchors)
    return FingerprintMap(bounds, float(grid_size), aps, anchors, sequences, ncols=ncols, nrows=nrows)


SimilarityFn = Callable[[Sequence[int], Sequence[int]], float]


def nearest_cells(
    fmap: FingerprintMap, seq: Sequence[int], k: int, sim: SimilarityFn | None = None
) -> list[tuple[Cell, float]]:
    """The ``k`` cells most similar to ``seq``, best first.

    Equal similarities are ordered by lower cell index. With ``sim=None`` the
    Kendall SIM is evaluated for all cells in one vectorised pass; a custom
    ``sim`` is called on each aligned (seq, cell sequence) pair and cells with
    fewer than two common APs are skipped.
    """
    if not 1 <= k <= len(fmap):
        raise ConfigurationError(f"k={k} outside [1, {len(fmap)}]")
    if sim is None:
        scores = sim_against_ranks(seq, fmap.ranks, fmap.column_of)
    else:
        scores = np.full(len(fmap), -np.inf)
        for i, ref in enumerate(fmap.sequences):
            try:
                scores[i] = sim(*align(seq, ref))
            except InsufficientOverlapError:
                continue
        if not np.isfinite(scores).any():
            raise InsufficientOverlapError("sequence overlaps no cell")
    order = np.argsort(-scores, kind="stable")[:k]
    return [(fmap.cell(int(i)), float(scores[i])) for i in order if np.isfinite(scores[i])]
