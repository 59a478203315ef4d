"""Line-delimited JSON measurement logs.

One record per line, UTF-8::

    {"type": "WIFI", "t": 12.0, "rss": {"1": -55.2, "2": -61.0}}
    {"type": "STEP", "t": 12.5, "c": 17, "alpha": 1.5708}
    {"type": "GT", "t": 12.5, "x": 3.1, "y": 4.0}
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from .errors import MalformedLogError
from .motion import DeadReckoningInput
from .observation import WifiScan
from .tracker import GroundTruth, Measurement


def record_to_dict(m: Measurement) -> dict:
    if isinstance(m, WifiScan):
        return {"type": "WIFI", "t": m.timestamp, "rss": {str(k): v for k, v in sorted(m.readings.items())}}
    if isinstance(m, DeadReckoningInput):
        return {"type": "STEP", "t": m.timestamp, "c": m.step_count, "alpha": m.heading}
    if isinstance(m, GroundTruth):
        return {"type": "GT", "t": m.timestamp, "x": m.x, "y": m.y}
    raise MalformedLogError(f"cannot serialise {type(m).__name__}")


def _num(d: dict, key: str, lineno: int) -> float:
    v = d.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise MalformedLogError(f"line {lineno}: field {key!r} must be a finite number, got {v!r}")
    return float(v)


def record_from_dict(d: dict, lineno: int = 0) -> Measurement:
    if not isinstance(d, dict):
        raise MalformedLogError(f"line {lineno}: record is not an object")
    kind = d.get("type")
    t = _num(d, "t", lineno)
    if kind == "WIFI":
        rss = d.get("rss")
        if not isinstance(rss, dict) or not rss:
            raise MalformedLogError(f"line {lineno}: WIFI record needs a non-empty 'rss' object")
        try:
            readings = {int(k): _num(rss, k, lineno) for k in rss}
        except ValueError as exc:
            raise MalformedLogError(f"line {lineno}: bad AP id in 'rss': {exc}") from exc
        return WifiScan(t, readings)
    if kind == "STEP":
        c = d.get("c")
        if isinstance(c, bool) or not isinstance(c, int) or c < 0:
            raise MalformedLogError(f"line {lineno}: STEP 'c' must be a non-negative integer, got {c!r}")
        return DeadReckoningInput(t, c, _num(d, "alpha", lineno))
    if kind == "GT":
        return GroundTruth(t, _num(d, "x", lineno), _num(d, "y", lineno))
    raise MalformedLogError(f"line {lineno}: unknown record type {kind!r}")


def dumps_record(m: Measurement) -> str:
    return json.dumps(record_to_dict(m), ensure_ascii=False)


def write_log(records: Iterable[Measurement], out: str | Path | TextIO) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            write_log(records, fh)
        return
    for m in records:
        out.write(dumps_record(m) + "\n")


def iter_log(lines: Iterable[str]) -> Iterator[Measurement]:
    """Parse records, checking that timestamps never decrease."""
    last_t = -math.inf
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLogError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        m = record_from_dict(d, lineno)
        if m.timestamp < last_t:
            raise MalformedLogError(f"line {lineno}: timestamp {m.timestamp} goes backwards")
        last_t = m.timestamp
        yield m


def read_log(path: str | Path) -> list[Measurement]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_log(fh))
