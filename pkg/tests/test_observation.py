import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqloc.errors import ConfigurationError, ScanSkipped
from seqloc.motion import Pose
from seqloc.observation import (
    LIKELIHOOD_FLOOR,
    Neighbors,
    ObservationConfig,
    SequenceObservationModel,
    WifiScan,
    likelihood,
    rss_sequence,
    select_neighbors,
    wknn_kernel,
)
from seqloc.seqmap import Bounds, build_map, nearest_cells
from seqloc.simulator import default_aps


def kernel_oracle(px, py, anchors, sims, lam):
    return sum(s * math.exp(-0.5 * ((px - ax) ** 2 + (py - ay) ** 2) / lam) for (ax, ay), s in zip(anchors, sims))


def nb(anchors, sims):
    return Neighbors(np.arange(len(sims)), np.array(anchors, dtype=float), np.array(sims, dtype=float))


@pytest.fixture(scope="module")
def fmap():
    return build_map(Bounds(0, 0, 25, 14), 2.0, default_aps())


def test_rss_sequence_examples():
    assert rss_sequence(WifiScan(0, {1: -70, 2: -50, 3: -55, 4: -60})) == (2, 3, 4, 1)
    assert rss_sequence(WifiScan(0, {1: -60, 2: -60}), 2) == (1, 2)
    with pytest.raises(ScanSkipped):
        rss_sequence(WifiScan(0, {1: -60, 2: -60}), 3)


def test_rss_sequence_of_the_worked_scan():
    # AP2 reads strongest although AP3 is nearest, giving 2341
    scan = WifiScan(30.0, {1: -82.0, 2: -58.0, 3: -61.0, 4: -66.0})
    assert rss_sequence(scan) == (2, 3, 4, 1)


@given(st.dictionaries(st.integers(1, 30), st.floats(-100, -20), min_size=2, max_size=12))
def test_rss_sequence_is_permutation(readings):
    seq = rss_sequence(WifiScan(0, readings))
    assert sorted(seq) == sorted(readings)
    vals = [readings[i] for i in seq]
    assert vals == sorted(vals, reverse=True)


def test_kernel_examples():
    one = nb([(3.0, 4.0)], [1.0])
    assert wknn_kernel(np.array([3.0]), np.array([4.0]), one, 0.01)[0] == 1.0
    assert wknn_kernel(np.array([4.0]), np.array([4.0]), one, 1.0)[0] == pytest.approx(math.exp(-0.5), abs=1e-15)
    two = nb([(0.0, 0.0), (5.0, 5.0)], [0.8, 0.6])
    got = wknn_kernel(np.array([0.0]), np.array([0.0]), nb([(0.0, 0.0), (1.0, 0.0)], [0.8, 0.6]), 1.0)[0]
    assert got == pytest.approx(0.8 + 0.6 * math.exp(-0.5), abs=1e-15)
    assert round(got, 4) == 1.1639
    # the floor keeps far particles positive
    assert wknn_kernel(np.array([100.0]), np.array([100.0]), two, 0.01)[0] == LIKELIHOOD_FLOOR


@given(
    st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 1)), min_size=1, max_size=6),
    st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 10),
)
def test_kernel_matches_oracle(cells, px, py, lam):
    anchors = [(a, b) for a, b, _ in cells]
    sims = [s for _, _, s in cells]
    got = wknn_kernel(np.array([px]), np.array([py]), nb(anchors, sims), lam)[0]
    want = max(kernel_oracle(px, py, anchors, sims, lam), LIKELIHOOD_FLOOR)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-300)
    assert got > 0


@given(
    st.lists(st.tuples(st.floats(-5, 0), st.floats(-5, 5), st.floats(0, 1)), min_size=1, max_size=6),
    st.floats(0, 5), st.floats(-5, 5), st.floats(0, 5),
)
def test_moving_away_never_increases(cells, px, py, dx):
    # every anchor sits at x <= 0 <= px, so a move in +x increases every distance
    n = nb([(a, b) for a, b, _ in cells], [s for _, _, s in cells])
    near = wknn_kernel(np.array([px]), np.array([py]), n, 1.0)[0]
    far = wknn_kernel(np.array([px + dx]), np.array([py]), n, 1.0)[0]
    assert far <= near


@given(st.floats(0.1, 5), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 3))
def test_lambda_scale_equivalence(c, px, py, lam):
    anchors = [(1.0, -0.5), (-2.0, 0.7)]
    sims = [0.9, 0.4]
    a = wknn_kernel(np.array([px * c]), np.array([py * c]), nb([(x * c, y * c) for x, y in anchors], sims), lam * c * c)[0]
    b = wknn_kernel(np.array([px]), np.array([py]), nb(anchors, sims), lam)[0]
    assert a == pytest.approx(b, rel=1e-9)


def test_likelihood_at_best_cell(fmap):
    cell = fmap.cell(30)
    cfg = ObservationConfig(k=1, lam=0.01)
    best, s = nearest_cells(fmap, cell.sequence, 1)[0]
    assert s == 1.0
    assert likelihood(Pose(best.anchor.x, best.anchor.y, 0.0), cell.sequence, fmap, cfg) == 1.0
    # heading is irrelevant
    assert likelihood(Pose(best.anchor.x, best.anchor.y, 2.0), cell.sequence, fmap, cfg) == 1.0


def test_global_top_k_is_shared(fmap):
    seq = fmap.cell(50).sequence
    n = select_neighbors(seq, fmap, 4)
    top = nearest_cells(fmap, seq, 4)
    assert n.indices.tolist() == [c.index for c, _ in top]
    assert n.weights.tolist() == [s for _, s in top]
    assert np.array_equal(n.anchors, fmap.anchors[n.indices])


def test_model_requires_known_aps(fmap):
    model = SequenceObservationModel(fmap, ObservationConfig())
    with pytest.raises(ScanSkipped):
        model.prepare(WifiScan(0, {1: -50.0, 2: -60.0}))
    with pytest.raises(ScanSkipped):
        model.prepare(WifiScan(0, {1: -50.0, 2: -60.0, 77: -40.0}))
    prepared = model.prepare(WifiScan(0, {1: -50.0, 2: -60.0, 3: -70.0, 77: -40.0}))
    assert len(prepared.indices) == 4


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ObservationConfig(k=0)
    with pytest.raises(ConfigurationError):
        ObservationConfig(lam=0.0)
