import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqloc.errors import ConfigurationError
from seqloc.logio import dumps_record
from seqloc.motion import DeadReckoningInput
from seqloc.observation import WifiScan, rss_sequence
from seqloc.seqmap import AccessPoint, Point2D, location_sequence
from seqloc.simulator import (
    DEFAULT_BOUNDS,
    PathLoss,
    Scenario,
    decimate,
    default_aps,
    default_scenario,
    generate,
    rectangle_loop,
    rss_at,
)
from seqloc.tracker import GroundTruth

AP = AccessPoint(1, (0.0, 0.0))


@pytest.fixture(scope="module")
def default_log():
    return generate(default_scenario())


@pytest.fixture(scope="module")
def quiet_log():
    return generate(default_scenario().noiseless())


def of(records, kind):
    return [m for m in records if isinstance(m, kind)]


def test_rss_examples():
    pl = PathLoss(-40.0, 2.0, 0.0)
    assert rss_at(AP, (10.0, 0.0), pl) == pytest.approx(-60.0, abs=1e-12)
    assert rss_at(AP, (0.0, 1.0), pl) == -40.0
    # the 0.1 m floor and the -20 dBm ceiling
    assert rss_at(AP, (0.0, 0.0), pl) == -20.0
    assert rss_at(AP, (1e6, 0.0), pl) == -100.0


def test_shadowing_moments():
    rng = np.random.default_rng(0)
    pl = PathLoss(-40.0, 2.0, 4.0)
    v = np.array([rss_at(AP, (10.0, 0.0), pl, rng) for _ in range(100_000)])
    assert np.std(v) == pytest.approx(4.0, rel=0.03)
    assert np.mean(v) == pytest.approx(-60.0, abs=0.05)


@given(st.floats(0.2, 60), st.floats(0.2, 60))
def test_rss_monotone_in_distance(d1, d2):
    pl = PathLoss(-40.0, 2.5, 0.0)
    a, b = rss_at(AP, (d1, 0.0), pl), rss_at(AP, (d2, 0.0), pl)
    if d1 < d2:
        assert a >= b
        if a > -100.0:
            assert a > b


def test_default_scenario_shape(default_log):
    s = default_scenario()
    assert len(s.aps) == 9
    for ap in s.aps:
        assert DEFAULT_BOUNDS.contains(ap.position)
    perimeter = 2 * (21.0 + 9.8)
    assert s.path_length == pytest.approx(10.5 * perimeter)
    assert s.path_length >= 600
    assert s.stride_m == pytest.approx(0.7)
    wifi = of(default_log, WifiScan)
    duration = s.path_length / s.speed_mps
    assert len(wifi) == math.floor(duration * 0.5) + 1
    # same order as the 415-scan experiment
    assert 350 <= len(wifi) <= 480


def test_gt_path_length_per_loop(quiet_log):
    s = default_scenario()
    gt = of(quiet_log, GroundTruth)
    xy = np.array([(g.x, g.y) for g in gt])
    travelled = np.sum(np.hypot(*np.diff(xy, axis=0).T))
    assert travelled == pytest.approx(s.path_length, abs=0.5)
    assert travelled / 10.5 == pytest.approx(2 * (21.0 + 9.8), abs=0.05)


def test_log_is_time_ordered_and_tagged(default_log):
    ts = [m.timestamp for m in default_log]
    assert ts == sorted(ts)
    steps = of(default_log, DeadReckoningInput)
    counts = [m.step_count for m in steps]
    assert counts == sorted(counts) and counts[0] == 0
    times = {m.timestamp for m in default_log if not isinstance(m, GroundTruth)}
    assert times == {g.timestamp for g in of(default_log, GroundTruth)}


def test_seed_determinism():
    a = [dumps_record(m) for m in generate(default_scenario(seed=3))]
    b = [dumps_record(m) for m in generate(default_scenario(seed=3))]
    c = [dumps_record(m) for m in generate(default_scenario(seed=4))]
    assert a == b
    assert a != c


def test_noiseless_rss_sequence_matches_location_sequence(quiet_log):
    aps = default_aps()
    gt = {g.timestamp: g for g in of(quiet_log, GroundTruth)}
    for scan in of(quiet_log, WifiScan):
        g = gt[scan.timestamp]
        assert rss_sequence(scan) == location_sequence((g.x, g.y), aps)


def test_noiseless_dead_reckoning_reproduces_gt(quiet_log):
    s = default_scenario()
    gt = {g.timestamp: g for g in of(quiet_log, GroundTruth)}
    steps = of(quiet_log, DeadReckoningInput)
    x, y = gt[0.0].x, gt[0.0].y
    prev = steps[0]
    worst = 0.0
    for cur in steps[1:]:
        dc = cur.step_count - prev.step_count
        x += s.stride_m * dc * math.cos(prev.heading)
        y += s.stride_m * dc * math.sin(prev.heading)
        g = gt[cur.timestamp]
        worst = max(worst, math.hypot(x - g.x, y - g.y))
        prev = cur
    assert worst < s.stride_m
    assert worst < 1e-9


def test_missed_steps_reduce_the_count():
    s = default_scenario().noiseless()
    s = replace(s, imu_noise=replace(s.imu_noise, step_count_miss_prob=0.2))
    steps = of(generate(s), DeadReckoningInput)
    full = of(generate(default_scenario().noiseless()), DeadReckoningInput)
    assert steps[-1].step_count < full[-1].step_count
    assert steps[-1].step_count == pytest.approx(0.8 * full[-1].step_count, rel=0.05)


def test_decimate():
    log = generate(default_scenario())
    wifi = len(of(log, WifiScan))
    assert decimate(log, 1) == log
    assert len(of(decimate(log, 2), WifiScan)) == math.ceil(wifi / 2)
    assert len(of(decimate(log, 8), WifiScan)) == math.ceil(wifi / 8)
    assert len(decimate(log, 8)) - len(of(decimate(log, 8), WifiScan)) == len(log) - wifi
    with pytest.raises(ConfigurationError):
        decimate(log, 0)


@settings(max_examples=30)
@given(st.integers(1, 500), st.integers(1, 16))
def test_decimate_counting(n_wifi, keep):
    recs = [WifiScan(float(i), {1: -50.0}) for i in range(n_wifi)]
    assert len(decimate(recs, keep)) == math.ceil(n_wifi / keep)


def test_decimate_415_by_8():
    recs = [WifiScan(float(i), {1: -50.0}) for i in range(415)]
    assert len(decimate(recs, 8)) == 52


def test_scenario_validation():
    s = default_scenario()
    with pytest.raises(ConfigurationError):
        replace(s, path=(Point2D(1, 1),))
    with pytest.raises(ConfigurationError):
        replace(s, wifi_rate_hz=0.0)
    with pytest.raises(ConfigurationError):
        replace(s, path=(Point2D(1, 1), Point2D(30, 1)))
    with pytest.raises(ConfigurationError):
        replace(s, path_loss=PathLoss(gamma=0.0))


def test_scenario_round_trip(tmp_path):
    s = default_scenario(seed=5)
    s.save(tmp_path / "s.json")
    assert Scenario.load(tmp_path / "s.json") == s


def test_rectangle_loop():
    pts = rectangle_loop(0, 0, 2, 1, 1.0)
    assert pts == (Point2D(0, 0), Point2D(2, 0), Point2D(2, 1), Point2D(0, 1), Point2D(0, 0))
    assert len(rectangle_loop(0, 0, 2, 1, 1.5)) == 7
