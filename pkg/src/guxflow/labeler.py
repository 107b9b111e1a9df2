"""Per-second affect/flow labeling from DTW match sequences.

A small two-head network maps the per-window match distances to sigmoid
probabilities: seven affect probabilities from the affect-prototype
distances and one flow probability from the whole-session distance.  It is
trained without per-second labels: the loss rewards a high Pearson
correlation between the mean positive-affect probability and the flow
probability while keeping negative affects decorrelated from flow.
Binarizing the trained probabilities yields per-second affect flags, the
motivation balance, and finally the experience state via the fuzzy rules.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import gut
from .validation import as_float_array, check_matrix, check_positive

AFFECTS = ("pleasure", "surprise", "trust", "lucky", "confusion", "regret", "disgust")
N_AFFECTS = len(AFFECTS)

# Loss constant: positive affect may outrun negative by at most this much,
# and |negative-affect correlation| must stay below loss_c - 1 = 0.4, the
# conventional weak-correlation bound.
DEFAULT_LOSS_C = 1.4

_POSITIVE = ("pleasure", "trust", "lucky")
_NEGATIVE = ("disgust", "confusion", "regret")


class UndefinedCorrelation(ValueError):
    """Raised when a Pearson correlation is requested for a constant sequence."""


class TrainingDiverged(RuntimeError):
    pass


def affect_partition(surprise_positive=True):
    """Indices of positive and negative affects; surprise defaults to positive."""
    positive = set(_POSITIVE) | ({"surprise"} if surprise_positive else set())
    negative = set(_NEGATIVE) | (set() if surprise_positive else {"surprise"})
    pa_idx = tuple(i for i, a in enumerate(AFFECTS) if a in positive)
    na_idx = tuple(i for i, a in enumerate(AFFECTS) if a in negative)
    return pa_idx, na_idx


def pearson(x, y):
    """Pearson correlation from raw sums: (N*Sxy - Sx*Sy) / (sqrt(N*Sxx - Sx^2) * sqrt(N*Syy - Sy^2))."""
    x = as_float_array(x, "x")
    y = as_float_array(y, "y")
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D sequences of equal length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points for a correlation")
    sx, sy = x.sum(), y.sum()
    den_x = n * (x * x).sum() - sx * sx
    den_y = n * (y * y).sum() - sy * sy
    if den_x <= 1e-12 * max(1.0, sx * sx) or den_y <= 1e-12 * max(1.0, sy * sy):
        raise UndefinedCorrelation("correlation undefined for a constant sequence")
    r = (n * (x * y).sum() - sx * sy) / (math.sqrt(den_x) * math.sqrt(den_y))
    return float(min(1.0, max(-1.0, r)))


def _pearson_with_grads(x, y):
    """Correlation plus its gradients w.r.t. every element, or None if constant."""
    cx = x - x.mean()
    cy = y - y.mean()
    sxx = float(cx @ cx)
    syy = float(cy @ cy)
    if sxx <= 1e-18 or syy <= 1e-18:
        return None
    sxy = float(cx @ cy)
    root = math.sqrt(sxx * syy)
    r = sxy / root
    dr_dx = (cy - (sxy / sxx) * cx) / root
    dr_dy = (cx - (sxy / syy) * cy) / root
    return r, dr_dx, dr_dy


def _na_bound(loss_c):
    # c - 1.0 in binary misses the stated decimal threshold (1.4 - 1.0 != 0.4),
    # so the decorrelation bound is rounded back to its decimal value
    return round(loss_c - 1.0, 12)


def labeler_loss_terms(x1, x2, loss_c=DEFAULT_LOSS_C):
    """Scalar loss for given correlations: (1-x1)^2 + hinge(x1-x2-c)^2 + hinge(|x2|-(c-1))^2."""
    h1 = max(0.0, x1 - x2 - loss_c)
    h2 = max(0.0, abs(x2) - _na_bound(loss_c))
    return (1.0 - x1) ** 2 + h1 ** 2 + h2 ** 2


def labeler_loss(pa_soft, na_soft, flow_soft, loss_c=DEFAULT_LOSS_C):
    """Loss over soft per-second lists.

    Returns (loss, x1, x2, x1_defined, x2_defined); a correlation that is
    undefined because its list is constant contributes zero to the loss and
    is reported as undefined.
    """
    pa_soft = as_float_array(pa_soft, "pa_soft")
    na_soft = as_float_array(na_soft, "na_soft")
    flow_soft = as_float_array(flow_soft, "flow_soft")
    if not len(pa_soft) == len(na_soft) == len(flow_soft) or len(pa_soft) < 2:
        raise ValueError("soft lists must share a length of at least 2")

    g1 = _pearson_with_grads(pa_soft, flow_soft)
    g2 = _pearson_with_grads(na_soft, flow_soft)
    x1 = g1[0] if g1 else 0.0
    x2 = g2[0] if g2 else 0.0

    loss = 0.0
    if g1:
        loss += (1.0 - x1) ** 2
    if g1 and g2:
        loss += max(0.0, x1 - x2 - loss_c) ** 2
    if g2:
        loss += max(0.0, abs(x2) - _na_bound(loss_c)) ** 2
    return loss, x1, x2, g1 is not None, g2 is not None


class _TwoLayerHead:
    """Fully-connected tanh hidden layer followed by a sigmoid output layer."""

    def __init__(self, n_in, n_hidden, n_out, rng, init_scale=0.1):
        self.w1 = rng.uniform(-init_scale, init_scale, size=(n_in, n_hidden))
        self.b1 = rng.uniform(-init_scale, init_scale, size=n_hidden)
        self.w2 = rng.uniform(-init_scale, init_scale, size=(n_hidden, n_out))
        self.b2 = rng.uniform(-init_scale, init_scale, size=n_out)

    def forward(self, x):
        z1 = x @ self.w1 + self.b1
        a1 = np.tanh(z1)
        z2 = a1 @ self.w2 + self.b2
        p = 1.0 / (1.0 + np.exp(-z2))
        return p, (x, a1, p)

    def preactivation(self, x):
        return np.tanh(x @ self.w1 + self.b1) @ self.w2 + self.b2

    def backward(self, cache, dp):
        x, a1, p = cache
        dz2 = dp * p * (1.0 - p)
        dw2 = a1.T @ dz2
        db2 = dz2.sum(axis=0)
        dz1 = (dz2 @ self.w2.T) * (1.0 - a1 ** 2)
        dw1 = x.T @ dz1
        db1 = dz1.sum(axis=0)
        return {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}

    def step(self, grads, lr):
        self.w1 -= lr * grads["w1"]
        self.b1 -= lr * grads["b1"]
        self.w2 -= lr * grads["w2"]
        self.b2 -= lr * grads["b2"]

    def flip_output(self):
        # sigmoid(-z) = 1 - sigmoid(z): negating the output layer inverts
        # every probability while leaving hidden features untouched
        self.w2 = -self.w2
        self.b2 = -self.b2

    def flip_unit(self, k):
        self.w2[:, k] = -self.w2[:, k]
        self.b2[k] = -self.b2[k]

    def params(self):
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def to_dict(self):
        return {k: v.tolist() for k, v in self.params().items()}

    @classmethod
    def from_dict(cls, d):
        head = cls.__new__(cls)
        head.w1 = np.asarray(d["w1"], dtype=float)
        head.b1 = np.asarray(d["b1"], dtype=float)
        head.w2 = np.asarray(d["w2"], dtype=float)
        head.b2 = np.asarray(d["b2"], dtype=float)
        return head


def otsu_split(values):
    """Exact two-cluster split of a 1-D sample: maximizes between-class variance.

    Returns (threshold, effectiveness) where effectiveness is the classic
    between-class to total variance ratio in [0, 1]; a clearly bimodal
    sample scores near 1, a unimodal one well below.  Candidate thresholds
    are the midpoints between consecutive sorted values; a constant sample
    returns (value, 0.0).
    """
    v = np.sort(np.asarray(values, dtype=float))
    n = len(v)
    if n < 2 or v[0] == v[-1]:
        return float(v[0]), 0.0
    csum = np.cumsum(v)
    total = csum[-1]
    sizes = np.arange(1, n)
    mean_lo = csum[:-1] / sizes
    mean_hi = (total - csum[:-1]) / (n - sizes)
    score = sizes * (n - sizes) * (mean_lo - mean_hi) ** 2
    best = int(np.argmax(score))
    between_var = score[best] / (n * n)
    total_var = v.var()
    return float((v[best] + v[best + 1]) / 2.0), float(between_var / total_var)


def otsu_threshold(values):
    """Two-cluster split threshold alone; see otsu_split."""
    return otsu_split(values)[0]


def best_agreement_threshold(z, target):
    """Threshold on z so that (z > t) reproduces the boolean target best.

    Ties resolve to the lowest candidate; candidates bracket the data so
    all-on and all-off are included.
    """
    z = np.asarray(z, dtype=float)
    target = np.asarray(target, dtype=bool)
    order = np.argsort(z, kind="stable")
    z_sorted = z[order]
    t_sorted = target[order]
    # candidate i flags the elements strictly above z_sorted[i-1]
    above_true = np.concatenate([[t_sorted.sum()], t_sorted.sum() - np.cumsum(t_sorted)])
    below_false = np.concatenate([[0], np.cumsum(~t_sorted)])
    agreement = above_true + below_false
    best = int(np.argmax(agreement))
    if best == 0:
        return float(z_sorted[0] - 1.0)
    if best == len(z):
        return float(z_sorted[-1] + 1.0)
    return float((z_sorted[best - 1] + z_sorted[best]) / 2.0)


class LabelerNetwork:
    """Affect head (7 -> H -> 7) and flow head (1 -> H -> 1), sigmoid outputs."""

    def __init__(self, hidden=16, seed=0):
        rng = np.random.default_rng(seed)
        self.hidden = hidden
        self.affect = _TwoLayerHead(N_AFFECTS, hidden, N_AFFECTS, rng)
        self.flow = _TwoLayerHead(1, hidden, 1, rng)

    def forward(self, v, w):
        pa, _ = self.affect.forward(v)
        pf, _ = self.flow.forward(w[:, None])
        return pa, pf[:, 0]

    def to_dict(self):
        return {"hidden": self.hidden,
                "affect_head": self.affect.to_dict(),
                "flow_head": self.flow.to_dict()}

    @classmethod
    def from_dict(cls, d):
        net = cls.__new__(cls)
        net.hidden = d["hidden"]
        net.affect = _TwoLayerHead.from_dict(d["affect_head"])
        net.flow = _TwoLayerHead.from_dict(d["flow_head"])
        return net


def forward(net, vm, wm):
    """Soft probabilities for a match-sequence pair: (affect (n,7), flow (n,))."""
    v = vm.values if hasattr(vm, "values") else np.asarray(vm, dtype=float)
    w = wm.values if hasattr(wm, "values") else np.asarray(wm, dtype=float)
    if w.ndim == 2:
        w = w[:, 0]
    v = check_matrix(v, N_AFFECTS, "video match values")
    if len(v) != len(w):
        raise ValueError("match sequences disagree on window count")
    return net.forward(v, w)


def loss_and_grads(net, v, w, pa_idx, na_idx, loss_c=DEFAULT_LOSS_C):
    """Full-batch loss and analytic gradients for both heads."""
    pa_probs, cache_a = net.affect.forward(v)
    pf_probs, cache_f = net.flow.forward(w[:, None])
    pa_soft = pa_probs[:, pa_idx].mean(axis=1)
    na_soft = pa_probs[:, na_idx].mean(axis=1)
    flow_soft = pf_probs[:, 0]

    g1 = _pearson_with_grads(pa_soft, flow_soft)
    g2 = _pearson_with_grads(na_soft, flow_soft)
    x1 = g1[0] if g1 else 0.0
    x2 = g2[0] if g2 else 0.0
    h1 = max(0.0, x1 - x2 - loss_c) if (g1 and g2) else 0.0
    h2 = max(0.0, abs(x2) - _na_bound(loss_c)) if g2 else 0.0

    loss = ((1.0 - x1) ** 2 if g1 else 0.0) + h1 ** 2 + h2 ** 2

    dl_dx1 = (-2.0 * (1.0 - x1) + 2.0 * h1) if g1 else 0.0
    dl_dx2 = (-2.0 * h1 + 2.0 * h2 * math.copysign(1.0, x2)) if g2 else 0.0

    n = len(flow_soft)
    dl_dpa = np.zeros(n)
    dl_dna = np.zeros(n)
    dl_dflow = np.zeros(n)
    if g1:
        dl_dpa += dl_dx1 * g1[1]
        dl_dflow += dl_dx1 * g1[2]
    if g2:
        dl_dna += dl_dx2 * g2[1]
        dl_dflow += dl_dx2 * g2[2]

    dprobs_a = np.zeros_like(pa_probs)
    dprobs_a[:, pa_idx] = (dl_dpa / len(pa_idx))[:, None]
    dprobs_a[:, na_idx] = (dl_dna / len(na_idx))[:, None]
    grads_a = net.affect.backward(cache_a, dprobs_a)
    grads_f = net.flow.backward(cache_f, dl_dflow[:, None])
    return loss, grads_a, grads_f, x1, x2


def train_labeler(net, vm, wm, steps=1000, lr=0.01, pa_idx=None, na_idx=None,
                  loss_c=DEFAULT_LOSS_C, backtrack=False):
    """Full-batch gradient descent on the correlation loss.

    With ``backtrack`` the step size is halved (for that step) whenever the
    proposed update would increase the loss, making the trajectory
    non-increasing.  Returns the per-step loss history; the network is
    updated in place.
    """
    if pa_idx is None or na_idx is None:
        pa_idx, na_idx = affect_partition()
    check_positive(steps, "steps")
    if lr < 0:
        raise ValueError(f"lr must be nonnegative, got {lr}")
    v = vm.values if hasattr(vm, "values") else np.asarray(vm, dtype=float)
    w = wm.values if hasattr(wm, "values") else np.asarray(wm, dtype=float)
    if w.ndim == 2:
        w = w[:, 0]

    history = []
    for step in range(int(steps)):
        loss, grads_a, grads_f, _, _ = loss_and_grads(net, v, w, pa_idx, na_idx, loss_c)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss {loss} at step {step}")
        history.append(loss)
        if not backtrack:
            net.affect.step(grads_a, lr)
            net.flow.step(grads_f, lr)
            continue
        trial = lr
        saved_a = {k: v_.copy() for k, v_ in net.affect.params().items()}
        saved_f = {k: v_.copy() for k, v_ in net.flow.params().items()}
        for _ in range(20):
            net.affect.step(grads_a, trial)
            net.flow.step(grads_f, trial)
            new_loss, _, _, _, _ = loss_and_grads(net, v, w, pa_idx, na_idx, loss_c)
            if new_loss <= loss or trial == 0.0:
                break
            for k in saved_a:
                getattr(net.affect, k)[...] = saved_a[k]
                getattr(net.flow, k)[...] = saved_f[k]
            trial /= 2.0
    return history


@dataclass
class ExperienceTimeline:
    """Per-second labeling output plus the session-level correlations."""

    t: np.ndarray
    affect_probs: np.ndarray
    affect_flags: np.ndarray
    flow_prob: np.ndarray
    flow_flag: np.ndarray
    pa_count: np.ndarray
    na_count: np.ndarray
    delta: np.ndarray
    gut_state: np.ndarray
    x1: float
    x2: float
    x1_defined: bool = True
    x2_defined: bool = True

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"pa{i}" for i in range(N_AFFECTS)]
                            + ["flow", "delta", "gut"])
            for i in range(len(self.t)):
                writer.writerow([repr(float(self.t[i]))]
                                + [int(f) for f in self.affect_flags[i]]
                                + [int(self.flow_flag[i]), int(self.delta[i]),
                                   int(self.gut_state[i])])


def read_timeline_csv(path):
    """Timeline CSV back into arrays: t, affect flags (n,7), flow, delta, gut."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["t"] + [f"pa{i}" for i in range(N_AFFECTS)] + ["flow", "delta", "gut"]
        if header != expected:
            raise ValueError(f"{path}: unexpected timeline header")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: timeline is empty")
    data = np.asarray(rows)
    return {
        "t": data[:, 0],
        "affect_flags": data[:, 1:1 + N_AFFECTS].astype(int),
        "flow_flag": data[:, 1 + N_AFFECTS].astype(int),
        "delta": data[:, 2 + N_AFFECTS].astype(int),
        "gut": data[:, 3 + N_AFFECTS].astype(int),
    }


def label_session(net, vm, wm, params=None, surprise_positive=True, threshold=0.5,
                  window_starts=None):
    """Timeline for a trained network on a session's match sequences.

    Binarizes the soft outputs, derives the per-second counts and
    motivation balance, computes the session-level correlations, and
    classifies every second with the fuzzy rules.
    """
    pa_probs, flow_prob = forward(net, vm, wm)
    pa_idx, na_idx = affect_partition(surprise_positive)
    return build_timeline(pa_probs, flow_prob, params=params, pa_idx=pa_idx,
                          na_idx=na_idx, threshold=threshold,
                          window_starts=window_starts)


def build_timeline(affect_probs, flow_prob, params=None, pa_idx=None, na_idx=None,
                   threshold=0.5, window_starts=None):
    """Binarize soft outputs and classify every second with the fuzzy rules."""
    params = (params or gut.GutParams()).validate()
    if pa_idx is None or na_idx is None:
        pa_idx, na_idx = affect_partition()
    affect_probs = check_matrix(affect_probs, N_AFFECTS, "affect_probs")
    flow_prob = as_float_array(flow_prob, "flow_prob")
    n = len(flow_prob)
    if len(affect_probs) != n:
        raise ValueError("affect and flow outputs disagree on length")
    t = np.arange(n, dtype=float) if window_starts is None else np.asarray(window_starts, dtype=float)

    flags = (affect_probs >= threshold).astype(int)
    flow_flag = (flow_prob >= threshold).astype(int)
    pa_count = flags[:, pa_idx].sum(axis=1)
    na_count = flags[:, na_idx].sum(axis=1)
    delta = np.array([gut.motivation_delta(p, q, params) for p, q in zip(pa_count, na_count)])

    pa_soft = affect_probs[:, pa_idx].mean(axis=1)
    na_soft = affect_probs[:, na_idx].mean(axis=1)
    try:
        x1 = pearson(pa_soft, flow_prob)
        x1_defined = True
    except (UndefinedCorrelation, ValueError):
        x1, x1_defined = 0.0, False
    try:
        x2 = pearson(na_soft, flow_prob)
        x2_defined = True
    except (UndefinedCorrelation, ValueError):
        x2, x2_defined = 0.0, False

    states = np.array([gut.classify(bool(f), int(d), x1) for f, d in zip(flow_flag, delta)])
    return ExperienceTimeline(
        t=t, affect_probs=affect_probs, affect_flags=flags,
        flow_prob=flow_prob, flow_flag=flow_flag,
        pa_count=pa_count, na_count=na_count, delta=delta, gut_state=states,
        x1=x1, x2=x2, x1_defined=x1_defined, x2_defined=x2_defined,
    )


class DeepDtwLabeler(BaseEstimator):
    """Trainable per-second labeler over match-sequence inputs.

    X has 8 columns: the 7 normalized affect-prototype distances followed
    by the normalized whole-session distance, one row per sliding window.
    Training is self-supervised (the correlation loss needs no per-second
    labels), which leaves the decision behavior of each sigmoid output
    uncalibrated: correlations are blind to sign flips and to shifts, so
    the raw probabilities need not straddle the fixed 0.5 threshold.  The
    ``calibrate`` step resolves this after training from the evidence
    semantics alone.  The flow output is oriented by the session-level
    flow flag (``whole_flow_label``): when the session as a whole was in
    flow, windows closer to the whole-session matrix must score a higher
    flow probability.  Each affect output is oriented so "present" means
    close to that affect's prototype.  Every output's bias is then
    recentered at the two-cluster split of its pre-activations over the
    training windows, but only when that split is real (Otsu effectiveness
    at least ``min_split_effectiveness``); outputs whose evidence does not
    separate into two clusters are pinned below threshold, i.e. treated
    as absent rather than flagged on noise.
    """

    def __init__(self, hidden=16, steps=1000, lr=0.01, loss_c=DEFAULT_LOSS_C, seed=0,
                 surprise_positive=True, whole_flow_label=True, calibrate=True,
                 min_split_effectiveness=0.75, backtrack=False, threshold=0.5,
                 gut_params=None):
        self.hidden = hidden
        self.steps = steps
        self.lr = lr
        self.loss_c = loss_c
        self.seed = seed
        self.surprise_positive = surprise_positive
        self.whole_flow_label = whole_flow_label
        self.calibrate = calibrate
        self.min_split_effectiveness = min_split_effectiveness
        self.backtrack = backtrack
        self.threshold = threshold
        self.gut_params = gut_params

    def fit(self, X, y=None):
        X = check_matrix(X, N_AFFECTS + 1, "X")
        if len(X) < 2:
            raise ValueError("need at least two windows to train")
        pa_idx, na_idx = affect_partition(self.surprise_positive)
        net = LabelerNetwork(hidden=self.hidden, seed=self.seed)
        v, w = X[:, :N_AFFECTS], X[:, N_AFFECTS]
        self.history_ = train_labeler(net, v, w, steps=self.steps, lr=self.lr,
                                      pa_idx=pa_idx, na_idx=na_idx,
                                      loss_c=self.loss_c, backtrack=self.backtrack)
        self.flipped_ = False
        self.flipped_affects_ = ()
        self.suppressed_ = ()
        if self.calibrate:
            self._calibrate(net, v, w)
        self.net_ = net
        pa_probs, flow_soft = net.forward(v, w)
        _, self.x1_, self.x2_, _, _ = labeler_loss(
            pa_probs[:, pa_idx].mean(axis=1), pa_probs[:, na_idx].mean(axis=1),
            flow_soft, self.loss_c)
        self.n_features_in_ = N_AFFECTS + 1
        return self

    def _calibrate(self, net, v, w):
        min_eff = self.min_split_effectiveness
        flipped_affects = []
        suppressed = []

        # flow orientation from the session-level flow label
        _, flow_soft = net.forward(v, w)
        res = _pearson_with_grads(flow_soft, w)
        if res is not None:
            inverted = res[0] > 0 if self.whole_flow_label else res[0] < 0
            if inverted:
                net.flow.flip_output()
                self.flipped_ = True

        # Pinning an output below threshold uses a small margin so the
        # sigmoid stays in its linear range and the soft probabilities keep
        # the trained correlation structure; only the flags switch off.
        zf = net.flow.preactivation(w[:, None])[:, 0]
        thr, eff = otsu_split(zf)
        if eff >= min_eff:
            net.flow.b2 = net.flow.b2 - thr
        else:
            net.flow.b2 = net.flow.b2 - (zf.max() + 0.05)
            suppressed.append("flow")

        # Each affect output is anchored on its own evidence.  Orientation:
        # a higher probability must mean a smaller distance to that
        # affect's prototype.  Flags: "present" windows are found on the
        # contrast evidence - the prototype distance relative to the
        # per-window mean over all prototypes - which isolates
        # affect-specific proximity from the shared
        # everything-matches-better component.  Outputs whose contrast
        # never splits into two clusters are pinned below threshold
        # instead of flagging noise.
        za = net.affect.preactivation(v)
        shared = v.mean(axis=1)
        for k in range(N_AFFECTS):
            zk = za[:, k]
            res = _pearson_with_grads(zk, v[:, k])
            if res is not None and res[0] > 0:
                net.affect.flip_unit(k)
                flipped_affects.append(AFFECTS[k])
                zk = -zk
            ck = v[:, k] - shared
            thr_c, eff = otsu_split(ck)
            present = ck <= thr_c
            if eff < min_eff or not present.any() or present.all():
                net.affect.b2[k] -= zk.max() + 0.05
                suppressed.append(AFFECTS[k])
                continue
            net.affect.b2[k] -= best_agreement_threshold(zk, present)
        self.flipped_affects_ = tuple(flipped_affects)
        self.suppressed_ = tuple(suppressed)

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError("this DeepDtwLabeler instance is not fitted yet")

    def predict_proba(self, X):
        """Soft outputs, columns: 7 affect probabilities then the flow probability."""
        self._check_fitted()
        X = check_matrix(X, N_AFFECTS + 1, "X")
        pa, pf = self.net_.forward(X[:, :N_AFFECTS], X[:, N_AFFECTS])
        return np.column_stack([pa, pf])

    def predict_timeline(self, X, window_starts=None):
        self._check_fitted()
        probs = self.predict_proba(X)
        pa_idx, na_idx = affect_partition(self.surprise_positive)
        return build_timeline(probs[:, :N_AFFECTS], probs[:, N_AFFECTS],
                              params=self.gut_params, pa_idx=pa_idx, na_idx=na_idx,
                              threshold=self.threshold, window_starts=window_starts)

    def predict(self, X):
        """Per-window experience state (0, 1, or 2)."""
        return self.predict_timeline(X).gut_state

    def to_json_dict(self):
        self._check_fitted()
        params = (self.gut_params or gut.GutParams()).validate()
        return {
            "kind": "dtw_labeler",
            "params": {k: v for k, v in self.get_params().items() if k != "gut_params"},
            "gut_params": {"k": params.k, "c": params.c, "d": int(params.d),
                           "beta0": params.beta0, "beta1": params.beta1,
                           "beta2": params.beta2, "beta3": params.beta3},
            "network": self.net_.to_dict(),
            "affects": list(AFFECTS),
            "x1": self.x1_,
            "x2": self.x2_,
            "flipped": self.flipped_,
            "flipped_affects": list(getattr(self, "flipped_affects_", ())),
            "suppressed": list(getattr(self, "suppressed_", ())),
        }

    @classmethod
    def from_json_dict(cls, d):
        if d.get("kind") != "dtw_labeler":
            raise ValueError("not a labeler model document")
        est = cls(gut_params=gut.GutParams(**d["gut_params"]), **d["params"])
        est.net_ = LabelerNetwork.from_dict(d["network"])
        est.x1_ = d["x1"]
        est.x2_ = d["x2"]
        est.flipped_ = d.get("flipped", False)
        est.flipped_affects_ = tuple(d.get("flipped_affects", ()))
        est.suppressed_ = tuple(d.get("suppressed", ()))
        est.history_ = []
        est.n_features_in_ = N_AFFECTS + 1
        return est


def save_labeler(est, path):
    with open(path, "w") as fh:
        json.dump(est.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_labeler(path):
    with open(path) as fh:
        return DeepDtwLabeler.from_json_dict(json.load(fh))
