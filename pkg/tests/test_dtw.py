from functools import lru_cache

import numpy as np
import pytest

from guxflow import dtw
from guxflow.labeler import AFFECTS
from guxflow.physio import FeatureMatrix, N_FEATURES, ROLE_SLIDING, ROLE_VIDEO, ROLE_WHOLE


def reference_dtw(a, b):
    """Memoized recursive alignment cost, independent of the DP implementation."""
    a = np.atleast_2d(np.asarray(a, dtype=float).T).T
    b = np.atleast_2d(np.asarray(b, dtype=float).T).T

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == 0 and j == 0:
            return 0.0
        if i == 0 or j == 0:
            return float("inf")
        local = float(np.linalg.norm(a[i - 1] - b[j - 1]))
        return local + min(rec(i - 1, j - 1), rec(i - 1, j), rec(i, j - 1))

    return rec(len(a), len(b))


def test_identity_is_exactly_zero():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.normal(size=(int(rng.integers(1, 10)), 4))
        assert dtw.dtw_distance(a, a).cost == 0.0


def test_scalar_examples():
    assert dtw.dtw_distance([1, 2, 3], [1, 2, 2, 3]).cost == 0.0
    assert dtw.dtw_distance([0, 0], [1, 1]).cost == 2.0


def test_matches_recursive_reference():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n, m = rng.integers(1, 33, size=2)
        d = int(rng.integers(1, 4))
        a = rng.normal(size=(n, d))
        b = rng.normal(size=(m, d))
        assert dtw.dtw_distance(a, b).cost == reference_dtw(a, b)


def test_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = rng.normal(size=(int(rng.integers(1, 12)), 3))
        b = rng.normal(size=(int(rng.integers(1, 12)), 3))
        assert abs(dtw.dtw_distance(a, b).cost - dtw.dtw_distance(b, a).cost) < 1e-12


def test_appending_duplicate_tail_is_cheap():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a = rng.normal(size=(int(rng.integers(2, 10)), 2))
        b = rng.normal(size=(int(rng.integers(2, 10)), 2))
        base = dtw.dtw_distance(a, b).cost
        extended = dtw.dtw_distance(a, np.vstack([b, b[-1]])).cost
        assert extended <= base + float(np.linalg.norm(a[-1] - b[-1])) + 1e-12


def test_path_len_bounds():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n, m = rng.integers(1, 10, size=2)
        a = rng.normal(size=(n, 2))
        b = rng.normal(size=(m, 2))
        res = dtw.dtw_distance(a, b, compute_path_len=True)
        assert max(n, m) <= res.path_len <= n + m - 1


def test_band_never_decreases_cost():
    rng = np.random.default_rng(9)
    for _ in range(30):
        a = rng.normal(size=(12, 2))
        b = rng.normal(size=(9, 2))
        free = dtw.dtw_distance(a, b).cost
        banded = dtw.dtw_distance(a, b, band=2).cost
        assert banded >= free - 1e-12


def test_rejects_dimension_mismatch_and_empty():
    with pytest.raises(ValueError, match="dimension"):
        dtw.dtw_distance(np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        dtw.dtw_distance([], [1, 2])


def _matrix(role, rows, label=None):
    rows = np.asarray(rows, dtype=float)
    return FeatureMatrix(role=role, rows=rows, window_s=10.0, step_s=1.0,
                         window_starts=np.arange(len(rows), dtype=float), label=label)


def _video_set(rng, special=None):
    videos = []
    for affect in AFFECTS:
        row = rng.normal(size=(1, N_FEATURES))
        if special is not None and affect == special[0]:
            row = special[1][None, :]
        videos.append(_matrix(ROLE_VIDEO, row, label=affect))
    return videos


def test_match_sequence_shapes():
    rng = np.random.default_rng(1)
    sliding = _matrix(ROLE_SLIDING, rng.normal(size=(111, N_FEATURES)))
    whole = _matrix(ROLE_WHOLE, rng.normal(size=(1, N_FEATURES)), label=True)
    vm, wm = dtw.build_match_sequences(sliding, _video_set(rng), whole, AFFECTS)
    assert vm.values.shape == (111, 7)
    assert wm.values.shape == (111, 1)
    assert np.all(vm.values >= 0) and np.all(vm.values <= 1)
    assert np.all(np.isfinite(vm.values)) and np.all(np.isfinite(wm.values))


def test_self_match_column_hits_zero():
    rng = np.random.default_rng(2)
    rows = rng.normal(size=(20, N_FEATURES))
    sliding = _matrix(ROLE_SLIDING, rows)
    whole = _matrix(ROLE_WHOLE, rng.normal(size=(1, N_FEATURES)), label=True)
    videos = _video_set(rng, special=("trust", rows[4]))
    vm, _ = dtw.build_match_sequences(sliding, videos, whole, AFFECTS,
                                      scale_features=False)
    trust_col = AFFECTS.index("trust")
    assert vm.values[4, trust_col] == 0.0


def test_constant_columns_are_flagged_and_zeroed():
    rng = np.random.default_rng(3)
    rows = np.tile(rng.normal(size=(1, N_FEATURES)), (10, 1))
    sliding = _matrix(ROLE_SLIDING, rows)
    whole = _matrix(ROLE_WHOLE, rng.normal(size=(1, N_FEATURES)), label=True)
    vm, wm = dtw.build_match_sequences(sliding, _video_set(rng), whole, AFFECTS)
    assert vm.constant_columns == tuple(range(7))
    assert wm.constant_columns == (0,)
    assert np.all(vm.values == 0.0)
    assert np.all(wm.values == 0.0)


def test_match_sequence_rejections():
    rng = np.random.default_rng(4)
    sliding = _matrix(ROLE_SLIDING, rng.normal(size=(5, N_FEATURES)))
    whole = _matrix(ROLE_WHOLE, rng.normal(size=(1, N_FEATURES)), label=True)
    with pytest.raises(ValueError, match="empty"):
        dtw.build_match_sequences(sliding, [], whole, AFFECTS)
    incomplete = _video_set(rng)[:-1]
    with pytest.raises(ValueError, match="no videos labeled"):
        dtw.build_match_sequences(sliding, incomplete, whole, AFFECTS)
    with pytest.raises(ValueError, match="role"):
        dtw.build_match_sequences(whole, _video_set(rng), whole, AFFECTS)
