"""Deterministic synthetic fixtures and brute-force oracles.

Real participant data is unpublished, so desk-scale verification runs on
generated sessions whose ground truth is known by construction: scheduled
affect intervals put an oscillation on that affect's channel, flow
intervals oscillate the attention/meditation channels and shorten the
beat-to-beat interval, and telemetry records are drawn from configurable
per-class Gaussians.  All outputs are reproducible bit for bit under a
fixed seed.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import gut
from .labeler import AFFECTS, ExperienceTimeline, N_AFFECTS, affect_partition, pearson, \
    UndefinedCorrelation
from .metric import GamePlayRecord, RECORD_DIM, TEAM_DIM
from .physio import DenoiseConfig, PhysioRecord, process_video

# Per-affect channel signatures: a zero-mean oscillation of the given
# amplitude on one dominant channel per affect.  An oscillation sweeps its
# full range inside every analysis window, so windows straddling an event
# boundary interpolate smoothly instead of turning into variance outliers,
# and the windowed statistics stay comparable across window lengths.
AFFECT_SIGNATURES = {
    "pleasure": {"alpha": 2.0},
    "surprise": {"delta": 2.0},
    "trust": {"gamma": 2.0},
    "lucky": {"high_beta": 2.0},
    "confusion": {"low_beta": 2.0},
    "regret": {"theta": 2.0},
    "disgust": {"gsr": 2.0},
}

FLOW_SIGNATURE = {"attention": 2.0, "meditation": 2.0}

SIGNATURE_FREQ_HZ = 1.0


@dataclass
class AffectEvent:
    start_s: float
    end_s: float
    affect: str
    intensity: float = 1.0


def _default_class_means():
    means = np.zeros((3, RECORD_DIM))
    # classes 0 and 2 share the team-fight distribution and split only on
    # the score-related block, so the personality branch carries real signal
    means[0, :TEAM_DIM] = 1.0
    means[0, TEAM_DIM:] = -3.0
    means[2, :TEAM_DIM] = 1.0
    means[2, TEAM_DIM:] = 3.0
    return means


@dataclass
class ScenarioConfig:
    seed: int = 0
    duration_s: float = 300.0
    affect_schedule: list = field(default_factory=list)
    flow_intervals: list = field(default_factory=list)
    sample_rate_hz: float = 182.0
    noise_level: float = 0.05
    base_rr_ms: float = 850.0
    flow_rr_ms: float = 750.0
    rr_jitter_ms: float = 2.0
    video_duration_s: float = 35.0
    videos_per_affect: int = 2
    surprise_positive: bool = True
    gut_params: gut.GutParams = field(default_factory=gut.GutParams)
    class_means: np.ndarray = field(default_factory=_default_class_means)
    class_scales: np.ndarray = field(default_factory=lambda: np.ones((3, RECORD_DIM)))
    class_proportions: tuple = (0.15, 0.70, 0.15)

    def validate(self):
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("duration and sample rate must be positive")
        for ev in self.affect_schedule:
            if ev.affect not in AFFECTS:
                raise ValueError(f"unknown affect {ev.affect!r}")
            if not (0 <= ev.start_s < ev.end_s <= self.duration_s):
                raise ValueError(f"event {ev} outside [0, {self.duration_s}]")
            if ev.intensity < 0:
                raise ValueError("intensities must be nonnegative")
        for start, end in self.flow_intervals:
            if not (0 <= start < end <= self.duration_s):
                raise ValueError(f"flow interval ({start}, {end}) outside [0, {self.duration_s}]")
        means = np.asarray(self.class_means, dtype=float)
        scales = np.asarray(self.class_scales, dtype=float)
        if means.shape != (3, RECORD_DIM) or scales.shape != (3, RECORD_DIM):
            raise ValueError(f"class geometry must have shape (3, {RECORD_DIM})")
        if np.any(scales <= 0):
            raise ValueError("class scales must be positive (degenerate covariance)")
        if len(self.class_proportions) != 3 or any(p <= 0 for p in self.class_proportions):
            raise ValueError("need three positive class proportions")
        self.gut_params.validate()
        return self


def default_labeling_scenario(seed=0):
    """Majority-flow session with all positive affects scheduled inside flow.

    Flow dominates the session, so the whole-session matrix resembles the
    flow regime and the whole-match distance separates the regimes cleanly.
    Ground truth is state 1 during flow (delta = +2) and state 0 elsewhere.
    """
    flow = [(20.0, 260.0)]
    schedule = [AffectEvent(s, e, a)
                for (s, e) in flow
                for a in ("pleasure", "surprise", "trust", "lucky")]
    return ScenarioConfig(seed=seed, duration_s=300.0,
                          affect_schedule=schedule, flow_intervals=flow).validate()


def default_game_scenario(seed=0):
    return ScenarioConfig(seed=seed).validate()


def _in_any(intervals, t):
    return any(start <= t < end for start, end in intervals)


def _oscillation(t, amplitude):
    return amplitude * np.sin(2.0 * np.pi * SIGNATURE_FREQ_HZ * t)


def _ecg_train(t, rate, rng, duration_s, rr_for_time, jitter_ms, noise_level):
    """Gaussian-pulse beat train whose beat-to-beat interval follows rr_for_time."""
    n = len(t)
    ecg = 0.2 * noise_level * rng.standard_normal(n)
    beat = 0.35
    sigma = 0.02
    reach = int(4 * sigma * rate)
    while beat < duration_s - 0.05:
        center = int(round(beat * rate))
        lo = max(0, center - reach)
        hi = min(n, center + reach + 1)
        ecg[lo:hi] += np.exp(-0.5 * ((t[lo:hi] - beat) / sigma) ** 2)
        rr_ms = rr_for_time(beat) + jitter_ms * rng.standard_normal()
        beat += rr_ms / 1000.0
    return ecg


def generate_physio(cfg):
    """Synthesize one session record plus the timeline its schedule implies."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    rate = cfg.sample_rate_hz
    n = int(round(cfg.duration_s * rate))
    t = np.arange(n) / rate

    channels = {}
    flow_mask = np.zeros(n, dtype=bool)
    for start, end in cfg.flow_intervals:
        flow_mask |= (t >= start) & (t < end)

    for name in ("gsr", "alpha", "delta", "gamma", "high_beta", "low_beta",
                 "theta", "attention", "meditation"):
        x = cfg.noise_level * rng.standard_normal(n)
        for ev in cfg.affect_schedule:
            amp = AFFECT_SIGNATURES[ev.affect].get(name)
            if amp:
                mask = (t >= ev.start_s) & (t < ev.end_s)
                x[mask] += _oscillation(t[mask], amp * ev.intensity)
        if name in FLOW_SIGNATURE:
            x[flow_mask] += _oscillation(t[flow_mask], FLOW_SIGNATURE[name])
        channels[name] = x

    def rr_for_time(beat):
        return cfg.flow_rr_ms if _in_any(cfg.flow_intervals, beat) else cfg.base_rr_ms

    channels["ecg"] = _ecg_train(t, rate, rng, cfg.duration_s, rr_for_time,
                                 cfg.rr_jitter_ms, cfg.noise_level)

    record = PhysioRecord(
        session_id=f"synthetic-{cfg.seed}",
        channels=channels,
        sample_rates={name: rate for name in channels},
    ).validate()
    return record, scheduled_timeline(cfg)


def scheduled_timeline(cfg):
    """Ground-truth per-second timeline implied by the schedule."""
    cfg.validate()
    n_sec = int(round(cfg.duration_s))
    seconds = np.arange(n_sec, dtype=float)
    flags = np.zeros((n_sec, N_AFFECTS), dtype=int)
    for ev in cfg.affect_schedule:
        a = AFFECTS.index(ev.affect)
        flags[(seconds >= ev.start_s) & (seconds < ev.end_s), a] = 1
    flow = np.array([1 if _in_any(cfg.flow_intervals, s) else 0 for s in seconds])

    pa_idx, na_idx = affect_partition(cfg.surprise_positive)
    pa_count = flags[:, pa_idx].sum(axis=1)
    na_count = flags[:, na_idx].sum(axis=1)
    delta = pa_count - na_count - cfg.gut_params.d

    pa_soft = flags[:, pa_idx].mean(axis=1)
    na_soft = flags[:, na_idx].mean(axis=1)
    try:
        x1 = pearson(pa_soft, flow.astype(float))
        x1_defined = True
    except (UndefinedCorrelation, ValueError):
        x1, x1_defined = 0.0, False
    try:
        x2 = pearson(na_soft, flow.astype(float))
        x2_defined = True
    except (UndefinedCorrelation, ValueError):
        x2, x2_defined = 0.0, False

    states = np.array([oracle_gut(bool(f), int(d), x1) for f, d in zip(flow, delta)])
    return ExperienceTimeline(
        t=seconds, affect_probs=flags.astype(float), affect_flags=flags,
        flow_prob=flow.astype(float), flow_flag=flow,
        pa_count=pa_count, na_count=na_count, delta=delta, gut_state=states,
        x1=x1, x2=x2, x1_defined=x1_defined, x2_defined=x2_defined,
    )


def generate_video_records(cfg):
    """Affect-eliciting clip records: the affect's channel oscillates for the whole clip."""
    cfg.validate()
    rate = cfg.sample_rate_hz
    n = int(round(cfg.video_duration_s * rate))
    t = np.arange(n) / rate
    records = []
    for a_idx, affect in enumerate(AFFECTS):
        for k in range(cfg.videos_per_affect):
            rng = np.random.default_rng([cfg.seed, a_idx, k])
            channels = {}
            for name in ("gsr", "alpha", "delta", "gamma", "high_beta", "low_beta",
                         "theta", "attention", "meditation"):
                x = cfg.noise_level * rng.standard_normal(n)
                amp = AFFECT_SIGNATURES[affect].get(name)
                if amp:
                    x += _oscillation(t, amp)
                channels[name] = x
            channels["ecg"] = _ecg_train(t, rate, rng, cfg.video_duration_s,
                                         lambda _: cfg.base_rr_ms,
                                         cfg.rr_jitter_ms, cfg.noise_level)
            records.append((affect, PhysioRecord(
                session_id=f"video-{affect}-{k}",
                channels=channels,
                sample_rates={name: rate for name in channels},
            ).validate()))
    return records


def video_feature_matrices(cfg, denoise_config=None):
    """Fully processed single-window feature matrices for every generated clip."""
    denoise_config = denoise_config or DenoiseConfig()
    return [process_video(rec, affect, config=denoise_config)
            for affect, rec in generate_video_records(cfg)]


def generate_game_records(cfg, n):
    """Labeled telemetry records drawn from the configured per-class Gaussians."""
    cfg.validate()
    if n < 3:
        raise ValueError("need at least three records (one per class)")
    rng = np.random.default_rng(cfg.seed)
    props = np.asarray(cfg.class_proportions, dtype=float)
    props = props / props.sum()
    counts = np.floor(props * n).astype(int)
    counts = np.maximum(counts, 1)
    while counts.sum() > n:
        counts[np.argmax(counts)] -= 1
    fractions = props * n - counts
    while counts.sum() < n:
        pick = int(np.argmax(fractions))
        counts[pick] += 1
        fractions[pick] = -1
    labels = rng.permutation(np.repeat(np.arange(3), counts))

    means = np.asarray(cfg.class_means, dtype=float)
    scales = np.asarray(cfg.class_scales, dtype=float)
    features = means[labels] + scales[labels] * rng.standard_normal((n, RECORD_DIM))

    records = []
    for i in range(n):
        t0 = float(rng.uniform(0.0, cfg.duration_s))
        steps = rng.normal(0.0, 5.0, size=(8, 2))
        xy = np.cumsum(np.vstack([rng.uniform(0.0, 100.0, size=2), steps]), axis=0)
        path = np.column_stack([t0 + np.arange(9, dtype=float), xy])
        records.append(GamePlayRecord(
            team_fight=features[i, :TEAM_DIM],
            score_related=features[i, TEAM_DIM:],
            hero_path=path,
            gut_label=int(labels[i]),
            t=t0,
        ).validate())
    return records


def nearest_mean_oracle(cfg, X):
    """Brute-force classifier: nearest configured class mean in raw feature space."""
    means = np.asarray(cfg.class_means, dtype=float)
    dists = np.linalg.norm(np.asarray(X)[:, None, :] - means[None, :, :], axis=2)
    return np.argmin(dists, axis=1)


# Exhaustive rule table keyed by (flow, delta == 0, x1 >= threshold); an
# independent rendering of the fuzzy rules used to cross-check gut.classify.
_RULE_TABLE = {
    (False, False, False): 0,
    (False, False, True): 0,
    (False, True, False): 0,
    (False, True, True): 0,
    (True, False, False): 1,
    (True, False, True): 1,
    (True, True, False): 1,
    (True, True, True): 2,
}


def oracle_gut(flow, delta, x1):
    return _RULE_TABLE[(bool(flow), delta == 0, x1 >= gut.X1_THRESHOLD)]


def experience_coordinates(states, params=None, seed=0):
    """Challenge/skill/motivation points consistent with per-second states.

    No measurement formula exists for these axes, so display-oriented
    coordinates are synthesized: best-state seconds sit close to the
    diagonal (well inside the radius-c tunnel), good seconds fill the
    tunnel interior, and average seconds land outside it.
    """
    params = (params or gut.GutParams()).validate()
    rng = np.random.default_rng(seed)
    states = np.asarray(states, dtype=int)
    points = np.zeros((len(states), 3))
    axis = np.ones(3) / np.sqrt(3.0)
    for i, state in enumerate(states):
        center = 1.0 + rng.uniform(0.0, 2.0)
        if state == 2:
            radius = params.c * rng.uniform(0.0, 0.2)
        elif state == 1:
            radius = params.c * rng.uniform(0.3, 0.9)
        else:
            radius = params.c * rng.uniform(1.2, 2.5)
        direction = rng.normal(size=3)
        direction -= (direction @ axis) * axis
        norm = np.linalg.norm(direction)
        if norm < 1e-12:
            direction, norm = np.array([1.0, -1.0, 0.0]), np.sqrt(2.0)
        # the offset is orthogonal to the diagonal, so the point's axis
        # distance is exactly the chosen radius
        points[i] = center * np.ones(3) + radius * direction / norm
    return points


def scenario_with(cfg=None, **overrides):
    """Convenience: copy a scenario with field overrides applied and validated."""
    cfg = cfg or ScenarioConfig()
    return replace(cfg, **overrides).validate()
