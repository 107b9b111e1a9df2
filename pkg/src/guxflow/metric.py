"""Experience-state prediction from match telemetry alone.

Each play record carries an 11-dim team-fight vector and a 33-dim
score-related vector.  Two predictors are provided: a plain embedding
classifier trained with weighted cross-entropy, and the main metric-learning
path, a Siamese pair of weight-shared embedding networks trained with a
contrastive loss whose score branch encodes the player's overall tendencies.
Prediction assigns a query to the nearest per-class mean embedding computed
over the training set.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .gut import GUT_STATES
from .validation import check_labels, check_matrix

TEAM_DIM = 11
SCORE_DIM = 33
RECORD_DIM = TEAM_DIM + SCORE_DIM

DEFAULT_CLASS_WEIGHTS = (2.0, 1.0, 2.0)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class GamePlayRecord:
    """One telemetry record: team-fight features, score features, optional path and label."""

    team_fight: np.ndarray
    score_related: np.ndarray
    hero_path: np.ndarray = None
    gut_label: int = None
    t: float = None

    def validate(self):
        self.team_fight = np.asarray(self.team_fight, dtype=float)
        self.score_related = np.asarray(self.score_related, dtype=float)
        if self.team_fight.shape != (TEAM_DIM,):
            raise ValueError(f"team_fight must have {TEAM_DIM} entries")
        if self.score_related.shape != (SCORE_DIM,):
            raise ValueError(f"score_related must have {SCORE_DIM} entries")
        if not (np.all(np.isfinite(self.team_fight)) and np.all(np.isfinite(self.score_related))):
            raise ValueError("telemetry features must be finite")
        if self.hero_path is not None:
            self.hero_path = np.asarray(self.hero_path, dtype=float)
            if self.hero_path.ndim != 2 or self.hero_path.shape[1] != 3:
                raise ValueError("hero_path must be a sequence of (t, x, y) rows")
        if self.gut_label is not None and int(self.gut_label) not in GUT_STATES:
            raise ValueError(f"gut_label must be one of {GUT_STATES}")
        return self


def records_to_arrays(records, require_labels=False):
    """Stack records into X (n, 44); returns (X, y) with y None if any label is missing."""
    if not records:
        raise ValueError("no records given")
    X = np.stack([np.concatenate([r.validate().team_fight, r.score_related]) for r in records])
    labels = [r.gut_label for r in records]
    if any(l is None for l in labels):
        if require_labels:
            raise ValueError("every record needs a gut label for training")
        return X, None
    return X, np.array([int(l) for l in labels])


def load_game_records(path):
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or not raw:
        raise ValueError(f"{path}: expected a non-empty JSON array of records")
    records = []
    for entry in raw:
        records.append(GamePlayRecord(
            team_fight=np.asarray(entry["team_fight"], dtype=float),
            score_related=np.asarray(entry["score_related"], dtype=float),
            hero_path=np.asarray(entry["path"], dtype=float) if "path" in entry else None,
            gut_label=entry.get("gut"),
            t=entry.get("t"),
        ).validate())
    return records


def save_game_records(records, path):
    out = []
    for r in records:
        r.validate()
        entry = {
            "team_fight": [float(v) for v in r.team_fight],
            "score_related": [float(v) for v in r.score_related],
        }
        if r.hero_path is not None:
            entry["path"] = [[float(v) for v in row] for row in r.hero_path]
        if r.gut_label is not None:
            entry["gut"] = int(r.gut_label)
        if r.t is not None:
            entry["t"] = float(r.t)
        out.append(entry)
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Losses

def softmax(logits):
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def weighted_ce_loss(logits, gt, weights=DEFAULT_CLASS_WEIGHTS):
    """Class-weighted cross-entropy of softmaxed logits for one record."""
    logits = np.asarray(logits, dtype=float)
    if logits.shape != (3,):
        raise ValueError("expected 3 logits")
    if gt not in GUT_STATES:
        raise ValueError(f"gt must be one of {GUT_STATES}")
    p = softmax(logits)
    return float(weights[gt] * -math.log(max(p[gt], 1e-12)))


def _weighted_ce_grad(logits, gt, weights):
    p = softmax(logits)
    g = p.copy()
    g[gt] -= 1.0
    return weights[gt] * g


def contrastive_loss(e1, e2, same, margin=1.0):
    """0.5 * (Y*D^2 + (1-Y)*max(0, margin-D)^2) with D the embedding distance.

    same (Y) is 1 for a same-class pair, 0 otherwise.
    """
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    if e1.shape != e2.shape:
        raise ValueError("embeddings must share a shape")
    if not margin > 0:
        raise ValueError(f"margin must be positive, got {margin}")
    d = float(np.linalg.norm(e1 - e2))
    if same:
        return 0.5 * d * d
    return 0.5 * max(0.0, margin - d) ** 2


def _contrastive_grads(e1, e2, same, margin):
    diff = e1 - e2
    if same:
        return diff, -diff
    d = float(np.linalg.norm(diff))
    if d >= margin or d < 1e-12:
        z = np.zeros_like(diff)
        return z, z
    g = -(margin - d) / d * diff
    return g, -g


# ---------------------------------------------------------------------------
# Embedding network

def _relu(x):
    return np.maximum(x, 0.0)


class _Mlp:
    """Dense stack; rectifier on every layer except optionally the last."""

    def __init__(self, dims, rng, final_linear, init_scale=0.1):
        self.final_linear = final_linear
        self.weights = []
        self.biases = []
        for i in range(len(dims) - 1):
            self.weights.append(rng.uniform(-init_scale, init_scale, size=(dims[i], dims[i + 1])))
            self.biases.append(rng.uniform(-init_scale, init_scale, size=dims[i + 1]))

    def forward(self, x):
        caches = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            caches.append((a, z))
            a = z if (self.final_linear and i == last) else _relu(z)
        return a, caches

    def backward(self, caches, dout):
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        d = dout
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            a_in, z = caches[i]
            dz = d if (self.final_linear and i == last) else d * (z > 0)
            grads_w[i] = a_in.T @ dz
            grads_b[i] = dz.sum(axis=0)
            d = dz @ self.weights[i].T
        return grads_w, grads_b, d

    def step(self, grads_w, grads_b, lr):
        for i in range(len(self.weights)):
            self.weights[i] -= lr * grads_w[i]
            self.biases[i] -= lr * grads_b[i]

    def to_dict(self):
        return {"final_linear": self.final_linear,
                "weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases]}

    @classmethod
    def from_dict(cls, d):
        mlp = cls.__new__(cls)
        mlp.final_linear = d["final_linear"]
        mlp.weights = [np.asarray(w, dtype=float) for w in d["weights"]]
        mlp.biases = [np.asarray(b, dtype=float) for b in d["biases"]]
        return mlp


class EmbeddingNetwork:
    """Team-fight branch, optional score branch, and a shared head.

    Branch outputs are concatenated and mapped through the head to either 3
    logits (classifier mode) or an embedding (metric mode).  A Siamese pair
    is simply this one object applied to both inputs, so the twins share
    weights by construction.
    """

    def __init__(self, out_dim=8, team_dims=(32, 16), score_dims=(16, 8),
                 head_hidden=(16,), use_personality=True, seed=0):
        rng = np.random.default_rng(seed)
        self.out_dim = out_dim
        self.use_personality = use_personality
        self.team = _Mlp((TEAM_DIM,) + tuple(team_dims), rng, final_linear=False)
        self.score = _Mlp((SCORE_DIM,) + tuple(score_dims), rng, final_linear=False)
        concat = tuple(team_dims)[-1] + (tuple(score_dims)[-1] if use_personality else 0)
        self.head = _Mlp((concat,) + tuple(head_hidden) + (out_dim,), rng, final_linear=True)

    def forward(self, team, score):
        a_team, c_team = self.team.forward(team)
        if self.use_personality:
            a_score, c_score = self.score.forward(score)
            joined = np.concatenate([a_team, a_score], axis=1)
        else:
            a_score, c_score = None, None
            joined = a_team
        out, c_head = self.head.forward(joined)
        return out, (c_team, c_score, c_head, a_team.shape[1])

    def backward(self, cache, dout):
        c_team, c_score, c_head, team_width = cache
        gw_h, gb_h, d_joined = self.head.backward(c_head, dout)
        gw_t, gb_t, _ = self.team.backward(c_team, d_joined[:, :team_width])
        if self.use_personality:
            gw_s, gb_s, _ = self.score.backward(c_score, d_joined[:, team_width:])
        else:
            gw_s = gb_s = None
        return {"team": (gw_t, gb_t), "score": (gw_s, gb_s), "head": (gw_h, gb_h)}

    def step(self, grads, lr):
        self.team.step(*grads["team"], lr)
        if self.use_personality and grads["score"][0] is not None:
            self.score.step(*grads["score"], lr)
        self.head.step(*grads["head"], lr)

    def to_dict(self):
        return {"out_dim": self.out_dim, "use_personality": self.use_personality,
                "team": self.team.to_dict(), "score": self.score.to_dict(),
                "head": self.head.to_dict()}

    @classmethod
    def from_dict(cls, d):
        net = cls.__new__(cls)
        net.out_dim = d["out_dim"]
        net.use_personality = d["use_personality"]
        net.team = _Mlp.from_dict(d["team"])
        net.score = _Mlp.from_dict(d["score"])
        net.head = _Mlp.from_dict(d["head"])
        return net


# ---------------------------------------------------------------------------
# Sampling, pairing, training

def oversample_indices(y, rng):
    """Indices resampling every present class with replacement up to the majority count."""
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    top = counts.max()
    pools = []
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        extra = rng.choice(idx, size=top - len(idx), replace=True) if len(idx) < top else \
            np.empty(0, dtype=int)
        pools.append(np.concatenate([idx, extra]))
    return rng.permutation(np.concatenate(pools))


def make_pairs(y, n_pairs, rng):
    """Seeded pair stream, exactly half same-class pairs, over oversampled pools.

    Returns (first_indices, second_indices, same_flags) indexing the
    original records.
    """
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("pairing needs at least two classes in the training set")
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    top = max(np.sum(y == c) for c in classes)
    pools = {}
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        extra = rng.choice(idx, size=top - len(idx), replace=True) if len(idx) < top else \
            np.empty(0, dtype=int)
        pools[cls] = np.concatenate([idx, extra])

    n_same = n_pairs // 2
    ia = np.empty(n_pairs, dtype=int)
    ib = np.empty(n_pairs, dtype=int)
    same = np.zeros(n_pairs, dtype=int)
    for k in range(n_same):
        cls = classes[rng.integers(len(classes))]
        ia[k], ib[k] = rng.choice(pools[cls], size=2, replace=True)
        same[k] = 1
    for k in range(n_same, n_pairs):
        c1, c2 = rng.choice(len(classes), size=2, replace=False)
        ia[k] = rng.choice(pools[classes[c1]])
        ib[k] = rng.choice(pools[classes[c2]])
    order = rng.permutation(n_pairs)
    return ia[order], ib[order], same[order]


def train_siamese(net, team, score, y, epochs=200, lr=0.05, margin=1.0, seed=0,
                  pairs_per_epoch=None):
    """SGD over contrastive pair losses; returns the per-epoch mean loss history."""
    rng = np.random.default_rng(seed)
    classes = np.unique(y)
    if pairs_per_epoch is None:
        pairs_per_epoch = int(max(np.sum(y == c) for c in classes)) * len(classes)
    history = []
    for _ in range(int(epochs)):
        ia, ib, same = make_pairs(y, pairs_per_epoch, rng)
        total = 0.0
        for i, j, s in zip(ia, ib, same):
            emb, cache = net.forward(team[[i, j]], score[[i, j]])
            loss = contrastive_loss(emb[0], emb[1], s, margin)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite contrastive loss {loss}")
            total += loss
            g1, g2 = _contrastive_grads(emb[0], emb[1], s, margin)
            net.step(net.backward(cache, np.stack([g1, g2])), lr)
        history.append(total / len(ia))
    return history


def train_weighted_classifier(net, team, score, y, epochs=200, lr=0.05,
                              weights=DEFAULT_CLASS_WEIGHTS, seed=0):
    """SGD on the weighted cross-entropy over oversampled records."""
    rng = np.random.default_rng(seed)
    history = []
    for _ in range(int(epochs)):
        order = oversample_indices(y, rng)
        total = 0.0
        for i in order:
            logits, cache = net.forward(team[[i]], score[[i]])
            loss = weighted_ce_loss(logits[0], int(y[i]), weights)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite cross-entropy loss {loss}")
            total += loss
            g = _weighted_ce_grad(logits[0], int(y[i]), weights)
            net.step(net.backward(cache, g[None, :]), lr)
        history.append(total / len(order))
    return history


def class_baselines(net, team, score, y):
    """Per-class mean embeddings over the training set; every state must occur."""
    emb, _ = net.forward(team, score)
    baselines = np.zeros((len(GUT_STATES), emb.shape[1]))
    for cls in GUT_STATES:
        mask = y == cls
        if not mask.any():
            raise ValueError(f"cannot build baselines: no training sample of class {cls}")
        baselines[cls] = emb[mask].mean(axis=0)
    return baselines


def nearest_baseline(baselines, emb):
    """Class of the closest baseline; exact ties resolve to the lower class index."""
    dists = np.linalg.norm(emb[:, None, :] - baselines[None, :, :], axis=2)
    return np.argmin(dists, axis=1)


# ---------------------------------------------------------------------------
# Estimators

class _StandardizedNetClassifier(BaseEstimator, ClassifierMixin):
    """Shared plumbing: positional 44-column input, per-column train-set z-scoring."""

    def _validate_fit_inputs(self, X, y):
        X = check_matrix(X, RECORD_DIM, "X")
        y = check_labels(y, len(X))
        return X, y

    def _fit_scaler(self, X):
        if self.standardize:
            self.mu_ = X.mean(axis=0)
            sigma = X.std(axis=0)
            self.sigma_ = np.where(sigma <= 1e-12, 1.0, sigma)
        else:
            self.mu_ = np.zeros(X.shape[1])
            self.sigma_ = np.ones(X.shape[1])

    def _scale_split(self, X):
        Xs = (X - self.mu_) / self.sigma_
        return Xs[:, :TEAM_DIM], Xs[:, TEAM_DIM:]

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError(f"this {type(self).__name__} instance is not fitted yet")


class SiameseGutClassifier(_StandardizedNetClassifier):
    """Metric-learning state predictor: contrastive twins plus class-mean baselines.

    ``use_personality=False`` drops the score branch, leaving the plain
    Siamese ablation over team-fight features alone.
    """

    def __init__(self, margin=1.0, lr=0.05, epochs=200, pairs_per_epoch=None,
                 embed_dim=8, team_dims=(32, 16), score_dims=(16, 8), head_hidden=(16,),
                 use_personality=True, standardize=True, seed=0):
        self.margin = margin
        self.lr = lr
        self.epochs = epochs
        self.pairs_per_epoch = pairs_per_epoch
        self.embed_dim = embed_dim
        self.team_dims = team_dims
        self.score_dims = score_dims
        self.head_hidden = head_hidden
        self.use_personality = use_personality
        self.standardize = standardize
        self.seed = seed

    def fit(self, X, y):
        X, y = self._validate_fit_inputs(X, y)
        self._fit_scaler(X)
        team, score = self._scale_split(X)
        net = EmbeddingNetwork(out_dim=self.embed_dim, team_dims=self.team_dims,
                               score_dims=self.score_dims, head_hidden=self.head_hidden,
                               use_personality=self.use_personality, seed=self.seed)
        self.history_ = train_siamese(net, team, score, y, epochs=self.epochs,
                                      lr=self.lr, margin=self.margin, seed=self.seed,
                                      pairs_per_epoch=self.pairs_per_epoch)
        self.net_ = net
        self.baselines_ = class_baselines(net, team, score, y)
        self.classes_ = np.array(GUT_STATES)
        self.n_features_in_ = RECORD_DIM
        return self

    def embed(self, X):
        self._check_fitted()
        X = check_matrix(X, RECORD_DIM, "X")
        team, score = self._scale_split(X)
        emb, _ = self.net_.forward(team, score)
        return emb

    def predict(self, X):
        emb = self.embed(X)
        return nearest_baseline(self.baselines_, emb)

    def to_json_dict(self):
        self._check_fitted()
        return {"kind": "siamese_gut", "params": self.get_params(),
                "scaler": {"mu": self.mu_.tolist(), "sigma": self.sigma_.tolist()},
                "network": self.net_.to_dict(),
                "baselines": self.baselines_.tolist()}

    @classmethod
    def from_json_dict(cls, d):
        params = dict(d["params"])
        for key in ("team_dims", "score_dims", "head_hidden"):
            params[key] = tuple(params[key])
        est = cls(**params)
        est.mu_ = np.asarray(d["scaler"]["mu"], dtype=float)
        est.sigma_ = np.asarray(d["scaler"]["sigma"], dtype=float)
        est.net_ = EmbeddingNetwork.from_dict(d["network"])
        est.baselines_ = np.asarray(d["baselines"], dtype=float)
        est.classes_ = np.array(GUT_STATES)
        est.n_features_in_ = RECORD_DIM
        est.history_ = []
        return est


class EmbeddingGutClassifier(_StandardizedNetClassifier):
    """Plain embedding classifier: 3 logits, weighted cross-entropy, argmax prediction."""

    def __init__(self, class_weights=DEFAULT_CLASS_WEIGHTS, lr=0.05, epochs=200,
                 team_dims=(32, 16), score_dims=(16, 8), head_hidden=(16,),
                 use_personality=True, standardize=True, seed=0):
        self.class_weights = class_weights
        self.lr = lr
        self.epochs = epochs
        self.team_dims = team_dims
        self.score_dims = score_dims
        self.head_hidden = head_hidden
        self.use_personality = use_personality
        self.standardize = standardize
        self.seed = seed

    def fit(self, X, y):
        X, y = self._validate_fit_inputs(X, y)
        self._fit_scaler(X)
        team, score = self._scale_split(X)
        net = EmbeddingNetwork(out_dim=3, team_dims=self.team_dims,
                               score_dims=self.score_dims, head_hidden=self.head_hidden,
                               use_personality=self.use_personality, seed=self.seed)
        self.history_ = train_weighted_classifier(net, team, score, y, epochs=self.epochs,
                                                  lr=self.lr, weights=self.class_weights,
                                                  seed=self.seed)
        self.net_ = net
        self.classes_ = np.array(GUT_STATES)
        self.n_features_in_ = RECORD_DIM
        return self

    def decision_function(self, X):
        self._check_fitted()
        X = check_matrix(X, RECORD_DIM, "X")
        team, score = self._scale_split(X)
        logits, _ = self.net_.forward(team, score)
        return logits

    def predict_proba(self, X):
        logits = self.decision_function(X)
        return np.apply_along_axis(softmax, 1, logits)

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)

    def to_json_dict(self):
        self._check_fitted()
        return {"kind": "embedding_gut", "params": self.get_params(),
                "scaler": {"mu": self.mu_.tolist(), "sigma": self.sigma_.tolist()},
                "network": self.net_.to_dict()}

    @classmethod
    def from_json_dict(cls, d):
        params = dict(d["params"])
        for key in ("team_dims", "score_dims", "head_hidden", "class_weights"):
            params[key] = tuple(params[key])
        est = cls(**params)
        est.mu_ = np.asarray(d["scaler"]["mu"], dtype=float)
        est.sigma_ = np.asarray(d["scaler"]["sigma"], dtype=float)
        est.net_ = EmbeddingNetwork.from_dict(d["network"])
        est.classes_ = np.array(GUT_STATES)
        est.n_features_in_ = RECORD_DIM
        est.history_ = []
        return est


def save_model(est, path):
    with open(path, "w") as fh:
        json.dump(est.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        d = json.load(fh)
    if d.get("kind") == "siamese_gut":
        return SiameseGutClassifier.from_json_dict(d)
    if d.get("kind") == "embedding_gut":
        return EmbeddingGutClassifier.from_json_dict(d)
    raise ValueError(f"{path}: unknown model kind {d.get('kind')!r}")


# ---------------------------------------------------------------------------
# Evaluation and splitting

@dataclass
class EvaluationMetrics:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    confusion_counts: np.ndarray
    confusion: np.ndarray
    missing_classes: tuple = ()

    def to_dict(self):
        def clean(v):
            return None if (isinstance(v, float) and math.isnan(v)) else v

        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_class": {
                str(c): {"precision": clean(float(self.precision[c])),
                         "recall": clean(float(self.recall[c])),
                         "f1": clean(float(self.f1[c]))}
                for c in GUT_STATES
            },
            "confusion_counts": self.confusion_counts.tolist(),
            "confusion_normalized": self.confusion.tolist(),
            "missing_classes": list(self.missing_classes),
        }


def evaluate(preds, gts):
    """Accuracy, macro precision/recall/F1, and the row-normalized confusion matrix.

    Macro scores are unweighted arithmetic means over the classes that occur
    in the ground truth; an absent class has undefined recall and is
    excluded (and reported in missing_classes).  Rows of the normalized
    confusion matrix sum to one except for absent classes, whose rows stay
    zero.
    """
    preds = check_labels(preds, len(np.asarray(preds)), "preds")
    gts = check_labels(gts, len(np.asarray(gts)), "gts")
    if len(preds) != len(gts) or len(gts) < 1:
        raise ValueError("preds and gts must be equally long and non-empty")

    k = len(GUT_STATES)
    counts = np.zeros((k, k), dtype=int)
    for g, p in zip(gts, preds):
        counts[g, p] += 1
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)

    normalized = np.zeros((k, k))
    for c in range(k):
        if support[c] > 0:
            normalized[c] = counts[c] / support[c]

    precision = np.full(k, np.nan)
    recall = np.full(k, np.nan)
    f1 = np.full(k, np.nan)
    included = []
    for c in range(k):
        if support[c] == 0:
            continue
        included.append(c)
        tp = counts[c, c]
        recall[c] = tp / support[c]
        precision[c] = tp / predicted[c] if predicted[c] > 0 else 0.0
        denom = precision[c] + recall[c]
        f1[c] = 2 * precision[c] * recall[c] / denom if denom > 0 else 0.0

    missing = tuple(c for c in range(k) if support[c] == 0)
    return EvaluationMetrics(
        accuracy=float((preds == gts).mean()),
        macro_precision=float(np.mean(precision[included])),
        macro_recall=float(np.mean(recall[included])),
        macro_f1=float(np.mean(f1[included])),
        precision=precision, recall=recall, f1=f1,
        confusion_counts=counts, confusion=normalized,
        missing_classes=missing,
    )


def metrics_to_json(metrics, path):
    with open(path, "w") as fh:
        json.dump(metrics.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def metrics_to_csv(metrics, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerow(["accuracy", repr(metrics.accuracy)])
        writer.writerow(["macro_precision", repr(metrics.macro_precision)])
        writer.writerow(["macro_recall", repr(metrics.macro_recall)])
        writer.writerow(["macro_f1", repr(metrics.macro_f1)])
        for c in GUT_STATES:
            writer.writerow([f"confusion_row{c}"] + [repr(float(v)) for v in metrics.confusion[c]])


def split_indices(y, ratio=0.7, seed=0):
    """Seeded train/test index split; train size is floor(n * ratio).

    Stratified by class when every class present has at least two members,
    preserving per-class proportions to within one record; otherwise a plain
    shuffled split.
    """
    y = np.asarray(y)
    n = len(y)
    if n < 2:
        raise ValueError("need at least two records to split")
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    n_train = int(math.floor(n * ratio))

    classes, class_counts = np.unique(y, return_counts=True)
    if class_counts.min() < 2:
        perm = rng.permutation(n)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])

    quotas = {}
    fractions = []
    total = 0
    for cls, cnt in zip(classes, class_counts):
        exact = cnt * ratio
        quotas[cls] = int(math.floor(exact))
        total += quotas[cls]
        fractions.append((exact - quotas[cls], -cnt, cls))
    for frac, _, cls in sorted(fractions, reverse=True):
        if total >= n_train:
            break
        quotas[cls] += 1
        total += 1

    train = []
    for cls in classes:
        idx = rng.permutation(np.flatnonzero(y == cls))
        train.extend(idx[:quotas[cls]])
    train = np.sort(np.array(train, dtype=int))
    test = np.setdiff1d(np.arange(n), train)
    return train, test


def split_dataset(records, ratio=0.7, seed=0):
    """Split a labeled record list into (train, test) lists."""
    _, y = records_to_arrays(records, require_labels=True)
    train_idx, test_idx = split_indices(y, ratio=ratio, seed=seed)
    return [records[i] for i in train_idx], [records[i] for i in test_idx]
