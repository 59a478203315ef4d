"""Log replay, tracking-error reports and parameter sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .baseline import CosineObservationModel, RssFingerprintMap, default_survey_points, survey
from .config import TrackConfig
from .errors import ConfigurationError
from .motion import DeadReckoningInput
from .observation import SequenceObservationModel, WifiScan
from .seqmap import Bounds, FingerprintMap, Point2D, build_map
from .simulator import Scenario, decimate, generate
from .tracker import Disk, GroundTruth, Measurement, Tracker

CDF_LEVELS = tuple(round(0.05 * i, 2) for i in range(1, 21))

SWEEP_PARAMETERS = {
    "n_particles": "n_particles",
    "lambda": "lam",
    "step_length": "step_length_m",
    "sigma_d": "sigma_d",
    "sigma_theta": "sigma_theta",
    "k": "k",
    "grid_size": "grid_size",
    "wifi_keep_every": "wifi_keep_every",
}


def summarize(errors: Sequence[float]) -> dict[str, Any]:
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        return {"n": 0, "mean_error_m": None, "median_error_m": None, "p90_error_m": None, "cdf": []}
    return {
        "n": int(e.size),
        "mean_error_m": float(np.mean(e)),
        "median_error_m": float(np.median(e)),
        "p90_error_m": float(np.percentile(e, 90)),
        "cdf": [{"fraction": q, "error_m": float(np.quantile(e, q))} for q in CDF_LEVELS],
    }


@dataclass
class TrackReport:
    """Per-record estimates against ground truth, with summary and timing.

    ``rows`` hold ``(t, x, y, theta, gt_x, gt_y, error_m)``; the gt fields and
    error are None outside ground-truth coverage. Wall-clock ``timing`` is kept
    apart from the deterministic document produced by :meth:`dumps`.
    """

    rows: list[tuple]
    summary: dict[str, Any]
    timing: dict[str, float]
    config: dict[str, Any]
    seed: int
    events: dict[str, int] = field(default_factory=dict)

    @property
    def mean_error_m(self) -> float:
        return self.summary["mean_error_m"]

    def errors(self) -> np.ndarray:
        return np.array([r[6] for r in self.rows if r[6] is not None], dtype=float)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "config": self.config,
            "seed": self.seed,
            "summary": self.summary,
            "events": self.events,
            "rows": [list(r) for r in self.rows],
        }
        if include_timing:
            d["timing"] = self.timing
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "theta", "gt_x", "gt_y", "error_m"])
        for r in self.rows:
            w.writerow(["" if v is None else repr(v) for v in r])
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        """Write ``path`` (JSON report), ``<stem>.timing.json`` and ``<stem>.csv``."""
        path = Path(path)
        path.write_text(self.dumps(), encoding="utf-8")
        path.with_suffix(".timing.json").write_text(json.dumps(self.timing, indent=1) + "\n", encoding="utf-8")
        path.with_suffix(".csv").write_text(self.rows_csv(), encoding="utf-8")


def _gt_arrays(records: Sequence[Measurement]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gts = [m for m in records if isinstance(m, GroundTruth)]
    return (
        np.array([g.timestamp for g in gts]),
        np.array([g.x for g in gts]),
        np.array([g.y for g in gts]),
    )


def run_track(
    reference: FingerprintMap | RssFingerprintMap | None,
    records: Sequence[Measurement],
    cfg: TrackConfig,
    seed: int = 0,
    bounds: Bounds | None = None,
) -> TrackReport:
    """Replay a measurement log through a tracker in ``cfg.mode``.

    ``reference`` is a FingerprintMap for fused/wifi modes, an RssFingerprintMap
    for baseline mode, and may be None for imu mode (``bounds`` then sets the
    fallback init region). The tracker starts in a disk of ``cfg.init_radius``
    around the first GT fix, headed along the first STEP heading.
    """
    mode = cfg.mode
    if mode in ("fused", "wifi"):
        if not isinstance(reference, FingerprintMap):
            raise ConfigurationError(f"{mode} mode needs a FingerprintMap")
        model = SequenceObservationModel(reference, cfg.observation())
        bounds = bounds or reference.bounds
    elif mode == "baseline":
        if not isinstance(reference, RssFingerprintMap):
            raise ConfigurationError("baseline mode needs an RssFingerprintMap")
        model = CosineObservationModel(reference, cfg.observation())
    else:
        model = None
        if isinstance(reference, FingerprintMap):
            bounds = bounds or reference.bounds

    records = decimate(records, cfg.wifi_keep_every)
    gt_t, gt_x, gt_y = _gt_arrays(records)
    first_step = next((m for m in records if isinstance(m, DeadReckoningInput)), None)
    init_region = Disk(Point2D(gt_x[0], gt_y[0]), cfg.init_radius) if gt_t.size else None
    if init_region is None and bounds is None:
        raise ConfigurationError("log has no GT fix and no bounds were given")
    tracker = Tracker(
        model, cfg.motion(), cfg.filter(init_region), np.random.default_rng(seed),
        bounds=bounds, initial_heading=None if first_step is None else first_step.heading,
    )

    rows = []
    update_ms = []
    for m in records:
        if isinstance(m, GroundTruth):
            continue
        if isinstance(m, DeadReckoningInput):
            if mode == "wifi":
                tracker.advance_clock(m.timestamp)
            else:
                tracker.predict(m)
            est = tracker.estimate()
        elif isinstance(m, WifiScan):
            if mode == "imu":
                tracker.advance_clock(m.timestamp)
                est = tracker.estimate()
            else:
                if mode == "wifi":
                    tracker.diffuse(cfg.wifi_rw_sigma, m.timestamp)
                t0 = time.perf_counter()
                used = tracker.correct(m)
                est = tracker.estimate()
                if used:
                    tracker.resample()
                update_ms.append((time.perf_counter() - t0) * 1e3)
        else:
            raise ConfigurationError(f"unknown record {m!r}")
        t = m.timestamp
        if gt_t.size and gt_t[0] <= t <= gt_t[-1]:
            gx = float(np.interp(t, gt_t, gt_x))
            gy = float(np.interp(t, gt_t, gt_y))
            err = math.hypot(est.x - gx, est.y - gy)
            rows.append((t, est.x, est.y, est.theta, gx, gy, err))
        else:
            rows.append((t, est.x, est.y, est.theta, None, None, None))

    errors = [r[6] for r in rows if r[6] is not None]
    summary = summarize(errors)
    summary["excluded_rows"] = len(rows) - len(errors)
    timing = {
        "updates": len(update_ms),
        "mean_update_ms": float(np.mean(update_ms)) if update_ms else 0.0,
        "max_update_ms": float(np.max(update_ms)) if update_ms else 0.0,
    }
    events = {
        "skipped_scans": sum(e.kind == "skip" for e in tracker.events),
        "divergences": sum(e.kind == "divergence" for e in tracker.events),
    }
    return TrackReport(rows, summary, timing, asdict(cfg), seed, events)


def reference_for(cfg: TrackConfig, scenario: Scenario) -> FingerprintMap | RssFingerprintMap:
    if cfg.mode == "baseline":
        pts = default_survey_points(scenario, cfg.survey_points)
        return survey(scenario, pts, cfg.survey_duration_s)
    return build_map(scenario.bounds, cfg.grid_size, scenario.aps)


def run_scenario(scenario: Scenario, cfg: TrackConfig, seed: int | None = None) -> TrackReport:
    """Generate the scenario's log, build the reference, and track it."""
    records = generate(scenario)
    return run_track(reference_for(cfg, scenario), records, cfg,
                     seed=scenario.seed if seed is None else seed, bounds=scenario.bounds)


def _sweep_job(args) -> list[float]:
    """All values of one repetition: the walk and references are built once."""
    scenario, cfgs, seed = args
    records = generate(scenario)
    refs: dict[tuple, FingerprintMap | RssFingerprintMap] = {}
    out = []
    for cfg in cfgs:
        key = ("survey",) if cfg.mode == "baseline" else ("grid", cfg.grid_size)
        if key not in refs:
            refs[key] = reference_for(cfg, scenario)
        out.append(run_track(refs[key], records, cfg, seed=seed, bounds=scenario.bounds).mean_error_m)
    return out


def sweep(
    parameter: str,
    values: Sequence[float],
    base: TrackConfig,
    scenario: Scenario,
    repetitions: int = 10,
    seed: int = 0,
    jobs: int = 1,
) -> list[dict[str, Any]]:
    """Mean and seed-std of the mean tracking error for each parameter value.

    Repetition ``r`` uses scenario seed ``seed + r`` and the same tracker seed,
    so every value sees the same set of simulated walks.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigurationError(f"unknown sweep parameter {parameter!r}; choose from {sorted(SWEEP_PARAMETERS)}")
    if repetitions < 1:
        raise ConfigurationError("repetitions must be >= 1")
    name = SWEEP_PARAMETERS[parameter]
    cast = int if name in ("n_particles", "k", "wifi_keep_every") else float
    cfgs = [replace(base, **{name: cast(v)}) for v in values]
    job_args = [(replace(scenario, seed=seed + r), cfgs, seed + r) for r in range(repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_rep = list(pool.map(_sweep_job, job_args))
    else:
        per_rep = [_sweep_job(a) for a in job_args]
    errs = np.array(per_rep)  # (repetitions, values)
    table = []
    for i, v in enumerate(values):
        e = errs[:, i]
        table.append({
            "parameter": parameter,
            "value": cast(v),
            "repetitions": repetitions,
            "mean_error_m": float(e.mean()),
            "std_error_m": float(e.std(ddof=1)) if repetitions > 1 else 0.0,
            "errors": [float(x) for x in e],
        })
    return table


def sweep_csv(table: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "value", "repetitions", "mean_error_m", "std_error_m"])
    for row in table:
        w.writerow([row["parameter"], row["value"], row["repetitions"], repr(row["mean_error_m"]), repr(row["std_error_m"])])
    return buf.getvalue()
