"""Dynamic time warping over feature rows and the per-window match sequences.

The labeling network consumes two kinds of match sequences built here: for
every sliding window, the DTW distance to each affect prototype (one column
per affect) and the DTW distance to the whole-session matrix (one column).
Distances are min-max normalized per column over the session so the network
sees bounded inputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .physio import ROLE_SLIDING, ROLE_VIDEO, ROLE_WHOLE
from .validation import as_sequence_2d

VIDEO_MATCH = "video_match"
WHOLE_MATCH = "whole_match"


@dataclass
class DtwDistance:
    cost: float
    path_len: int = None


@dataclass
class MatchSequence:
    """Per-window distance columns; kind is video_match (one column per affect
    prototype) or whole_match (a single column)."""

    kind: str
    values: np.ndarray
    affects: tuple = ()
    constant_columns: tuple = ()


def euclidean(u, v):
    return float(np.linalg.norm(u - v))


def dtw_distance(a, b, metric=None, band=None, compute_path_len=False):
    """Accumulated minimal alignment cost between two vector sequences.

    Classic O(len(a) * len(b)) dynamic program with match / insert / delete
    steps and Euclidean local cost by default.  ``band`` restricts |i - j|
    to a Sakoe-Chiba window when sequences get long; desk-scale inputs do
    not need it.
    """
    a = as_sequence_2d(a, "a")
    b = as_sequence_2d(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    metric = metric or euclidean
    n, m = len(a), len(b)
    if band is not None and band < abs(n - m):
        band = abs(n - m)

    acc = np.full((n + 1, m + 1), math.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        lo, hi = 1, m
        if band is not None:
            lo = max(1, i - band)
            hi = min(m, i + band)
        for j in range(lo, hi + 1):
            local = metric(a[i - 1], b[j - 1])
            acc[i, j] = local + min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])

    path_len = None
    if compute_path_len:
        i, j = n, m
        path_len = 1
        while i > 1 or j > 1:
            steps = [(acc[i - 1, j - 1], i - 1, j - 1),
                     (acc[i - 1, j], i - 1, j),
                     (acc[i, j - 1], i, j - 1)]
            _, i, j = min(steps, key=lambda s: s[0])
            path_len += 1
    return DtwDistance(cost=float(acc[n, m]), path_len=path_len)


def affect_prototypes(videos, affects):
    """One prototype row per affect: the mean feature vector over that affect's clips."""
    if not videos:
        raise ValueError("video feature list is empty")
    grouped = {}
    for v in videos:
        if v.role != ROLE_VIDEO:
            raise ValueError(f"expected video role, got {v.role!r}")
        if v.label is None:
            raise ValueError("every video matrix needs an affect label")
        grouped.setdefault(v.label, []).append(v.rows)
    missing = [a for a in affects if a not in grouped]
    if missing:
        raise ValueError(f"no videos labeled with affects: {missing}")
    return np.stack([np.concatenate(grouped[a]).mean(axis=0) for a in affects])


def _minmax_columns(values):
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    span = hi - lo
    constant = np.flatnonzero(span <= 1e-12)
    span = np.where(span <= 1e-12, 1.0, span)
    normalized = (values - lo) / span
    normalized[:, constant] = 0.0
    return normalized, tuple(int(c) for c in constant)


def build_match_sequences(sliding, videos, whole, affects, metric=None,
                          scale_features=True):
    """DTW match sequences of a sliding matrix against affect prototypes and the whole matrix.

    Each sliding row is treated as a length-1 sequence.  With
    ``scale_features`` (the default) every feature column is z-scored by
    the sliding-matrix statistics before the local cost is computed, so
    channel statistics and millisecond-scale heart-rate features weigh in
    comparably; the same affine map is applied to the prototypes and the
    whole-session rows.  Output columns are min-max normalized over the
    session; all-constant columns are zeroed and reported in
    constant_columns.
    """
    sliding.validate()
    whole.validate()
    if sliding.role != ROLE_SLIDING:
        raise ValueError(f"sliding matrix has role {sliding.role!r}")
    if whole.role != ROLE_WHOLE:
        raise ValueError(f"whole matrix has role {whole.role!r}")

    protos = affect_prototypes(videos, affects)
    sliding_rows = sliding.rows
    whole_rows = whole.rows
    if scale_features:
        mu = sliding_rows.mean(axis=0)
        sd = sliding_rows.std(axis=0)
        sd = np.where(sd <= 1e-12, 1.0, sd)
        sliding_rows = (sliding_rows - mu) / sd
        whole_rows = (whole_rows - mu) / sd
        protos = (protos - mu) / sd

    n = len(sliding_rows)
    video_raw = np.zeros((n, len(affects)))
    whole_raw = np.zeros((n, 1))
    for w in range(n):
        row_seq = sliding_rows[w][None, :]
        for a in range(len(affects)):
            video_raw[w, a] = dtw_distance(row_seq, protos[a][None, :], metric=metric).cost
        whole_raw[w, 0] = dtw_distance(row_seq, whole_rows, metric=metric).cost

    video_norm, video_const = _minmax_columns(video_raw)
    whole_norm, whole_const = _minmax_columns(whole_raw)
    return (
        MatchSequence(VIDEO_MATCH, video_norm, affects=tuple(affects),
                      constant_columns=video_const),
        MatchSequence(WHOLE_MATCH, whole_norm, constant_columns=whole_const),
    )


def write_match_csv(match, path):
    """Debug dump of a match sequence."""
    import csv

    names = list(match.affects) if match.kind == VIDEO_MATCH else ["whole"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window"] + names)
        for w, row in enumerate(match.values):
            writer.writerow([w] + [repr(float(v)) for v in row])
