"""Physiological signal ingestion, denoising, heart-beat detection, and windowed features.

A session record holds one sample array per channel (ECG, skin conductance,
and eight EEG-derived channels).  Features are 6 summary statistics per
channel plus 6 heart-rate-variability statistics computed from the
beat-to-beat (RR) intervals, 66 values per window in total.  Three window
roles exist: a sliding 10 s / 1 s-step matrix over a play session, a single
window over the whole session, and a single window per affect-eliciting
video clip.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d
from scipy.signal import butter, filtfilt

from .validation import as_float_array, check_positive

EEG_CHANNELS = (
    "alpha", "delta", "gamma", "high_beta", "low_beta", "theta",
    "attention", "meditation",
)
CHANNELS = ("ecg", "gsr") + EEG_CHANNELS

STAT_NAMES = ("mean", "median", "var", "max", "min", "range")
HRV_NAMES = ("hrv_max", "hrv_min", "hrv_sdnn", "hrv_sdann", "hrv_rmssd", "hrv_mean")

# 10 channels x 6 stats + 6 HRV features = 66 columns.
FEATURE_NAMES = tuple(f"{ch}_{st}" for ch in CHANNELS for st in STAT_NAMES) + HRV_NAMES
N_FEATURES = len(FEATURE_NAMES)

ECG_RATE_HZ = 182.0
EEG_RATE_HZ = 160.6
DEFAULT_RATES = {"ecg": ECG_RATE_HZ, "gsr": ECG_RATE_HZ}
DEFAULT_RATES.update({ch: EEG_RATE_HZ for ch in EEG_CHANNELS})

ROLE_VIDEO = "video"
ROLE_WHOLE = "whole"
ROLE_SLIDING = "sliding"

RR_MIN_MS = 200.0
RR_MAX_MS = 2000.0


@dataclass
class DenoiseConfig:
    """Smoothing window (samples) for the moving-average step; 1 disables smoothing."""

    smooth_window: int = 5

    def validate(self):
        if int(self.smooth_window) != self.smooth_window or self.smooth_window < 1:
            raise ValueError(f"smooth_window must be a positive integer, got {self.smooth_window}")
        return self


@dataclass
class PhysioRecord:
    """Multi-channel sample arrays for one session, with per-channel rates in Hz."""

    session_id: str
    channels: dict
    sample_rates: dict = None
    start_time: float = 0.0
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sample_rates is None:
            self.sample_rates = {}
        for name in self.channels:
            self.sample_rates.setdefault(name, DEFAULT_RATES.get(name, ECG_RATE_HZ))

    def validate(self):
        if not self.channels:
            raise ValueError("record has no channels")
        for name, samples in self.channels.items():
            arr = as_float_array(samples, f"channel {name!r}")
            if arr.ndim != 1:
                raise ValueError(f"channel {name!r} must be 1-D")
            self.channels[name] = arr
            check_positive(self.sample_rates[name], f"sample rate of {name!r}")
        return self

    @property
    def duration_s(self):
        return min(len(s) / self.sample_rates[n] for n, s in self.channels.items())


@dataclass
class RrSeries:
    """Beat-to-beat intervals in ms plus the detected R-peak times in seconds.

    interval_starts holds the starting peak time of each kept interval;
    intervals outside the physiological gate [200, 2000] ms are dropped and
    counted in n_dropped (so len(rr_intervals) = len(peak_times) - 1 only
    when nothing was dropped).
    """

    rr_intervals: np.ndarray
    peak_times: np.ndarray
    interval_starts: np.ndarray
    n_dropped: int = 0

    @property
    def available(self):
        return len(self.rr_intervals) >= 1

    def restrict(self, t_start, t_end):
        """Intervals whose both peaks fall inside [t_start, t_end)."""
        ends = self.interval_starts + self.rr_intervals / 1000.0
        mask = (self.interval_starts >= t_start) & (ends < t_end)
        return RrSeries(
            rr_intervals=self.rr_intervals[mask],
            peak_times=self.peak_times[(self.peak_times >= t_start) & (self.peak_times < t_end)],
            interval_starts=self.interval_starts[mask],
            n_dropped=0,
        )


@dataclass
class FeatureMatrix:
    """Per-window 66-dim feature rows for one of the three window roles."""

    role: str
    rows: np.ndarray
    window_s: float
    step_s: float
    window_starts: np.ndarray
    label: object = None
    hrv_missing: tuple = ()

    def validate(self):
        if self.role not in (ROLE_VIDEO, ROLE_WHOLE, ROLE_SLIDING):
            raise ValueError(f"unknown role {self.role!r}")
        if self.rows.ndim != 2 or self.rows.shape[1] != N_FEATURES:
            raise ValueError(f"rows must be (n, {N_FEATURES}), got {self.rows.shape}")
        if len(self.rows) == 0:
            raise ValueError("feature matrix has no rows")
        return self


def moving_average(x, window):
    """Centered moving average with boundary-aware normalization (same length)."""
    if window <= 1:
        return np.array(x, dtype=float)
    kernel = np.ones(int(window))
    num = np.convolve(x, kernel, mode="same")
    den = np.convolve(np.ones(len(x)), kernel, mode="same")
    return num / den


def denoise_and_normalize(raw, config=None):
    """Smooth every channel, then z-score it to zero mean and unit variance.

    Uses the population standard deviation over the full record.  A
    zero-variance channel is mapped to all zeros and listed under the
    record's ``zero_variance`` flag rather than treated as an error.
    """
    config = (config or DenoiseConfig()).validate()
    raw.validate()
    out_channels = {}
    zero_variance = []
    for name, samples in raw.channels.items():
        smoothed = moving_average(samples, config.smooth_window)
        mean = smoothed.mean()
        std = smoothed.std()  # population convention
        if std <= 1e-12:
            out_channels[name] = np.zeros_like(smoothed)
            zero_variance.append(name)
        else:
            out_channels[name] = (smoothed - mean) / std
    flags = dict(raw.flags)
    if zero_variance:
        flags["zero_variance"] = tuple(zero_variance)
    return PhysioRecord(
        session_id=raw.session_id,
        channels=out_channels,
        sample_rates=dict(raw.sample_rates),
        start_time=raw.start_time,
        flags=flags,
    )


def _bandpass(x, rate_hz, low=5.0, high=15.0, order=2):
    nyq = rate_hz / 2.0
    high = min(high, 0.95 * nyq)
    low = min(low, 0.5 * high)
    b, a = butter(order, [low / nyq, high / nyq], btype="band")
    padlen = min(3 * max(len(a), len(b)), len(x) - 1)
    return filtfilt(b, a, x, padlen=padlen)


def detect_r_peaks(ecg, rate_hz, refractory_s=0.2, threshold_frac=0.6):
    """Locate R peaks via a bandpass / differentiate / square / integrate chain.

    The integrated energy is compared against an adaptive threshold of
    threshold_frac times its running maximum (2 s neighborhood); candidate
    peaks closer than the refractory period to the previous accepted peak
    are discarded.  Returns an RrSeries; fewer than two detected peaks
    yields an empty series (HRV unavailable), never an exception.
    """
    ecg = as_float_array(ecg, "ecg")
    check_positive(rate_hz, "rate_hz")
    if len(ecg) < 2 * rate_hz:
        raise ValueError(f"need at least 2 s of ECG samples, got {len(ecg) / rate_hz:.2f} s")

    filtered = _bandpass(ecg, rate_hz)
    energy = np.diff(filtered) ** 2
    win = max(1, int(round(0.15 * rate_hz)))
    integrated = moving_average(energy, win)

    peak_global = integrated.max()
    if peak_global <= 0:
        empty = np.array([])
        return RrSeries(empty, empty, empty)

    run_max = maximum_filter1d(integrated, size=max(1, int(round(2.0 * rate_hz))))
    threshold = threshold_frac * run_max

    candidates = np.flatnonzero(
        (integrated[1:-1] > integrated[:-2])
        & (integrated[1:-1] >= integrated[2:])
        & (integrated[1:-1] >= threshold[1:-1])
        & (integrated[1:-1] > 0)
    ) + 1

    refine = max(1, int(round(0.1 * rate_hz)))
    sq = filtered ** 2
    peaks = []
    last_t = -math.inf
    for idx in candidates:
        lo = max(0, idx - refine)
        hi = min(len(sq), idx + refine + 1)
        r_idx = lo + int(np.argmax(sq[lo:hi]))
        t = r_idx / rate_hz
        if t - last_t < refractory_s:
            continue
        peaks.append(t)
        last_t = t

    peak_times = np.array(peaks)
    if len(peak_times) < 2:
        empty = np.array([])
        return RrSeries(empty, peak_times, empty)

    rr = np.diff(peak_times) * 1000.0
    keep = (rr > RR_MIN_MS) & (rr < RR_MAX_MS)
    return RrSeries(
        rr_intervals=rr[keep],
        peak_times=peak_times,
        interval_starts=peak_times[:-1][keep],
        n_dropped=int((~keep).sum()),
    )


def hrv_features(rr, segment_s=60.0):
    """Six HRV statistics: max, min, SDNN, SDANN, RMSSD, mean of the RR intervals.

    SDNN is the population standard deviation of all intervals; SDANN the
    population standard deviation of per-segment interval means (segments
    of segment_s seconds, anchored at the first interval); RMSSD the root
    mean square of successive differences.  A single interval yields
    SDNN = RMSSD = 0 and sets the returned flag.

    Returns (features, degenerate_flag).
    """
    check_positive(segment_s, "segment_s")
    intervals = np.asarray(rr.rr_intervals, dtype=float)
    if len(intervals) == 0:
        raise ValueError("RR series is empty; HRV is unavailable")

    sdnn = intervals.std()
    seg_idx = np.floor((rr.interval_starts - rr.interval_starts[0]) / segment_s).astype(int)
    seg_means = np.array([intervals[seg_idx == s].mean() for s in np.unique(seg_idx)])
    sdann = seg_means.std()

    degenerate = len(intervals) < 2
    rmssd = 0.0 if degenerate else math.sqrt(np.mean(np.diff(intervals) ** 2))

    features = np.array([
        intervals.max(), intervals.min(), sdnn, sdann, rmssd, intervals.mean(),
    ])
    return features, degenerate


def window_stats(samples):
    """Mean, median, population variance, max, min, and range of one window."""
    x = np.asarray(samples, dtype=float)
    return np.array([x.mean(), np.median(x), x.var(), x.max(), x.min(), x.max() - x.min()])


def window_count(duration_s, window_s, step_s):
    return int(math.floor((duration_s - window_s) / step_s + 1e-9)) + 1


def extract_features(rec, rr, role, window_s=None, step_s=None, label=None, segment_s=60.0):
    """Windowed 66-dim feature rows from a denoised record and its RR series.

    Sliding role defaults to 10 s windows with a 1 s step; whole and video
    roles use a single window spanning the full record.  HRV statistics use
    the intervals whose peaks fall inside each window; windows without any
    such interval get zero HRV features and are listed in hrv_missing.
    """
    rec.validate()
    missing = set(CHANNELS) - set(rec.channels)
    if missing:
        raise ValueError(f"record lacks channels: {sorted(missing)}")

    duration = rec.duration_s
    if role == ROLE_SLIDING:
        window_s = 10.0 if window_s is None else float(window_s)
        step_s = 1.0 if step_s is None else float(step_s)
    elif role in (ROLE_WHOLE, ROLE_VIDEO):
        window_s = duration if window_s is None else float(window_s)
        step_s = window_s if step_s is None else float(step_s)
    else:
        raise ValueError(f"unknown role {role!r}")
    check_positive(window_s, "window_s")
    check_positive(step_s, "step_s")
    if duration + 1e-9 < window_s:
        raise ValueError(
            f"record duration {duration:.3f} s is shorter than the window {window_s:.3f} s"
        )

    n_windows = window_count(duration, window_s, step_s) if role == ROLE_SLIDING else 1
    starts = np.arange(n_windows) * step_s

    rows = np.zeros((n_windows, N_FEATURES))
    hrv_missing = []
    for w, t0 in enumerate(starts):
        col = 0
        for name in CHANNELS:
            rate = rec.sample_rates[name]
            i0 = int(round(t0 * rate))
            i1 = min(len(rec.channels[name]), i0 + int(round(window_s * rate)))
            if i1 - i0 < 1:
                raise ValueError(f"window {w} contains no samples of channel {name!r}")
            rows[w, col:col + 6] = window_stats(rec.channels[name][i0:i1])
            col += 6
        sub = rr.restrict(t0, t0 + window_s)
        if sub.available:
            rows[w, col:col + 6], _ = hrv_features(sub, segment_s=segment_s)
        else:
            hrv_missing.append(w)

    return FeatureMatrix(
        role=role,
        rows=rows,
        window_s=window_s,
        step_s=step_s,
        window_starts=starts,
        label=label,
        hrv_missing=tuple(hrv_missing),
    ).validate()


def process_session(raw, config=None, window_s=None, step_s=None, whole_label=None,
                    segment_s=60.0):
    """Denoise a raw record and extract its sliding and whole feature matrices."""
    rec = denoise_and_normalize(raw, config)
    rr = detect_r_peaks(rec.channels["ecg"], rec.sample_rates["ecg"])
    sliding = extract_features(rec, rr, ROLE_SLIDING, window_s, step_s, segment_s=segment_s)
    whole = extract_features(rec, rr, ROLE_WHOLE, label=whole_label, segment_s=segment_s)
    return sliding, whole, rr


def process_video(raw, affect, config=None, segment_s=60.0):
    """Denoise one affect-eliciting clip record and extract its single-window features."""
    rec = denoise_and_normalize(raw, config)
    rr = detect_r_peaks(rec.channels["ecg"], rec.sample_rates["ecg"])
    return extract_features(rec, rr, ROLE_VIDEO, label=affect, segment_s=segment_s)


# ---------------------------------------------------------------------------
# File formats

def _fmt(v):
    return repr(float(v))


def read_physio_csv(path, session_id=None, start_time=None):
    """Read a combined session CSV: header ``t,<channel>,...``, one row per tick.

    All channels share the grid; the rate is inferred from the first two
    time stamps.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t":
            raise ValueError(f"{path}: expected header starting with 't'")
        names = header[1:]
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two rows to infer the sample rate")
    data = np.asarray(rows)
    dt = data[1, 0] - data[0, 0]
    if dt <= 0:
        raise ValueError(f"{path}: time column must be strictly increasing")
    rate = 1.0 / dt
    channels = {name: data[:, i + 1].copy() for i, name in enumerate(names)}
    return PhysioRecord(
        session_id=session_id or str(path),
        channels=channels,
        sample_rates={name: rate for name in names},
        start_time=data[0, 0] if start_time is None else start_time,
    ).validate()


def read_physio_manifest(path):
    """Read a JSON manifest mapping each channel to a native-rate CSV file.

    Schema: {"session_id": ..., "start_time": 0.0,
             "channels": {name: {"file": relpath, "rate_hz": hz}}}.
    Channel CSVs have a header row and a ``value`` column (a leading ``t``
    column is permitted and ignored).
    """
    import os

    with open(path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    channels = {}
    rates = {}
    for name, entry in manifest["channels"].items():
        file_path = os.path.join(base, entry["file"])
        with open(file_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            idx = header.index("value") if "value" in header else len(header) - 1
            channels[name] = np.array([float(row[idx]) for row in reader if row])
        rates[name] = float(entry["rate_hz"])
    return PhysioRecord(
        session_id=manifest.get("session_id", str(path)),
        channels=channels,
        sample_rates=rates,
        start_time=float(manifest.get("start_time", 0.0)),
    ).validate()


def write_physio_csv(rec, path):
    """Write a combined session CSV; requires all channels on one grid."""
    rec.validate()
    rates = set(rec.sample_rates[n] for n in rec.channels)
    lengths = set(len(s) for s in rec.channels.values())
    if len(rates) != 1 or len(lengths) != 1:
        raise ValueError("combined CSV requires a shared sample grid; write a manifest instead")
    rate = rates.pop()
    names = sorted(rec.channels)
    n = lengths.pop()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + names)
        for i in range(n):
            t = rec.start_time + i / rate
            writer.writerow([_fmt(t)] + [_fmt(rec.channels[name][i]) for name in names])


def write_feature_csv(matrix, path):
    """Write one feature matrix: window_start_s plus the 66 named columns."""
    matrix.validate()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_start_s"] + list(FEATURE_NAMES))
        for t0, row in zip(matrix.window_starts, matrix.rows):
            writer.writerow([_fmt(t0)] + [_fmt(v) for v in row])


def read_feature_csv(path, role, label=None, window_s=None):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["window_start_s"] + list(FEATURE_NAMES):
            raise ValueError(f"{path}: unexpected feature CSV header")
        data = np.asarray([[float(v) for v in row] for row in reader if row])
    if data.size == 0:
        raise ValueError(f"{path}: feature CSV has no rows")
    starts = data[:, 0]
    step = float(starts[1] - starts[0]) if len(starts) > 1 else 1.0
    if window_s is None:
        window_s = 10.0 if role == ROLE_SLIDING else float("nan")
    return FeatureMatrix(
        role=role,
        rows=data[:, 1:],
        window_s=window_s,
        step_s=step,
        window_starts=starts,
        label=label,
    ).validate()


def write_video_features_csv(matrices, path):
    """Write affect-labeled single-window video features, one row per clip."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["affect"] + list(FEATURE_NAMES))
        for m in matrices:
            m.validate()
            if m.role != ROLE_VIDEO or m.label is None:
                raise ValueError("video feature rows need role 'video' and an affect label")
            for row in m.rows:
                writer.writerow([m.label] + [_fmt(v) for v in row])


def read_video_features_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["affect"] + list(FEATURE_NAMES):
            raise ValueError(f"{path}: unexpected video feature CSV header")
        matrices = []
        for row in reader:
            if not row:
                continue
            vec = np.asarray([float(v) for v in row[1:]])
            matrices.append(FeatureMatrix(
                role=ROLE_VIDEO,
                rows=vec[None, :],
                window_s=float("nan"),
                step_s=float("nan"),
                window_starts=np.zeros(1),
                label=row[0],
            ))
    if not matrices:
        raise ValueError(f"{path}: no video rows")
    return matrices
