import json
import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from guxflow import metric, synth
from guxflow.metric import (
    EmbeddingGutClassifier, EmbeddingNetwork, GamePlayRecord, SiameseGutClassifier,
    class_baselines, contrastive_loss, evaluate, make_pairs, nearest_baseline,
    oversample_indices, records_to_arrays, split_indices, train_siamese,
    weighted_ce_loss,
)

FAST = dict(epochs=25, pairs_per_epoch=120)


# ---------------------------------------------------------------------------
# losses

def test_weighted_ce_zero_case_is_exact():
    assert weighted_ce_loss(np.array([1000.0, 0.0, 0.0]), 0) == 0.0
    assert weighted_ce_loss(np.array([0.0, 0.0, 1000.0]), 2) == 0.0


def test_weighted_ce_hand_values():
    # logits chosen so the target probability is exactly one half
    assert abs(weighted_ce_loss(np.array([math.log(2), 0.0, 0.0]), 0)
               - 2 * math.log(2)) < 1e-12
    assert abs(weighted_ce_loss(np.array([0.0, math.log(2), 0.0]), 1)
               - math.log(2)) < 1e-12


def test_weighted_ce_nonnegative_and_validates():
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert weighted_ce_loss(rng.normal(size=3), int(rng.integers(3))) >= 0.0
    with pytest.raises(ValueError):
        weighted_ce_loss(np.zeros(3), 5)


def test_contrastive_zero_cases_are_exact():
    e = np.array([0.3, -0.2, 1.0])
    assert contrastive_loss(e, e, 1) == 0.0
    far = e + np.array([2.0, 0.0, 0.0])
    assert contrastive_loss(e, far, 0, margin=1.0) == 0.0


def test_contrastive_hand_value():
    e1 = np.zeros(4)
    e2 = np.array([0.4, 0.0, 0.0, 0.0])
    assert abs(contrastive_loss(e1, e2, 0, margin=1.0) - 0.18) < 1e-12
    assert abs(contrastive_loss(e1, e2, 1, margin=1.0) - 0.5 * 0.16) < 1e-12


def test_contrastive_validates():
    with pytest.raises(ValueError):
        contrastive_loss(np.zeros(3), np.zeros(4), 1)
    with pytest.raises(ValueError):
        contrastive_loss(np.zeros(3), np.zeros(3), 1, margin=0.0)


# ---------------------------------------------------------------------------
# pairing and sampling

def test_oversampling_equalizes_counts():
    y = np.array([0] * 5 + [1] * 90 + [2] * 5)
    idx = oversample_indices(y, np.random.default_rng(0))
    counts = np.bincount(y[idx], minlength=3)
    assert counts[0] == counts[1] == counts[2] == 90


def test_make_pairs_balance_and_determinism():
    y = np.array([0, 0, 0, 1, 1, 1, 1, 2, 2, 2])
    ia, ib, same = make_pairs(y, 100, np.random.default_rng(3))
    assert len(ia) == 100
    assert same.sum() == 50
    for i, j, s in zip(ia, ib, same):
        assert (y[i] == y[j]) == bool(s)
    ia2, ib2, same2 = make_pairs(y, 100, np.random.default_rng(3))
    assert np.array_equal(ia, ia2) and np.array_equal(ib, ib2)
    assert np.array_equal(same, same2)


def test_make_pairs_rejects_single_class():
    with pytest.raises(ValueError, match="two classes"):
        make_pairs(np.zeros(10, dtype=int), 10, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# networks and training

def test_twin_embeddings_share_weights():
    net = EmbeddingNetwork(seed=0)
    rng = np.random.default_rng(1)
    team = rng.normal(size=(1, 11))
    score = rng.normal(size=(1, 33))
    e1, _ = net.forward(team, score)
    e2, _ = net.forward(team, score)
    assert np.array_equal(e1, e2)


def test_network_roundtrip():
    net = EmbeddingNetwork(out_dim=5, team_dims=(6, 4), score_dims=(5, 3),
                           head_hidden=(4,), seed=2)
    back = EmbeddingNetwork.from_dict(json.loads(json.dumps(net.to_dict())))
    rng = np.random.default_rng(2)
    team, score = rng.normal(size=(3, 11)), rng.normal(size=(3, 33))
    assert np.allclose(net.forward(team, score)[0], back.forward(team, score)[0])


def test_train_siamese_zero_lr_keeps_weights_and_baselines():
    rng = np.random.default_rng(4)
    team, score = rng.normal(size=(12, 11)), rng.normal(size=(12, 33))
    y = np.array([0, 1, 2] * 4)
    net = EmbeddingNetwork(seed=5)
    initial = class_baselines(net, team, score, y)
    w_before = net.head.weights[0].copy()
    train_siamese(net, team, score, y, epochs=3, lr=0.0, seed=0, pairs_per_epoch=20)
    assert np.array_equal(net.head.weights[0], w_before)
    assert np.allclose(class_baselines(net, team, score, y), initial)


def test_train_siamese_history_prefix_deterministic():
    rng = np.random.default_rng(5)
    team, score = rng.normal(size=(15, 11)), rng.normal(size=(15, 33))
    y = np.array([0, 1, 2] * 5)
    h_short = train_siamese(EmbeddingNetwork(seed=1), team, score, y,
                            epochs=4, lr=0.05, seed=9, pairs_per_epoch=30)
    h_long = train_siamese(EmbeddingNetwork(seed=1), team, score, y,
                           epochs=8, lr=0.05, seed=9, pairs_per_epoch=30)
    assert h_long[:4] == h_short


def test_train_siamese_separates_clusters(game_fixture):
    X, y = game_fixture["X"], game_fixture["y"]
    tr = game_fixture["train_idx"][:120]
    est = SiameseGutClassifier(seed=0, **FAST).fit(X[tr], y[tr])
    emb = est.embed(X[tr])
    labels = y[tr]
    intra, inter = [], []
    rng = np.random.default_rng(0)
    for _ in range(400):
        i, j = rng.integers(len(emb), size=2)
        d = np.linalg.norm(emb[i] - emb[j])
        (intra if labels[i] == labels[j] else inter).append(d)
    assert np.mean(intra) < np.mean(inter)


def test_nearest_baseline_zero_distance_and_ties():
    baselines = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]])
    assert nearest_baseline(baselines, np.array([[5.0, 5.0]]))[0] == 2
    # exactly halfway between classes 0 and 1 resolves to the lower index
    assert nearest_baseline(baselines, np.array([[0.5, 0.0]]))[0] == 0


def test_class_baselines_require_every_state():
    rng = np.random.default_rng(6)
    team, score = rng.normal(size=(6, 11)), rng.normal(size=(6, 33))
    with pytest.raises(ValueError, match="class 2"):
        class_baselines(EmbeddingNetwork(seed=0), team, score, np.array([0, 1] * 3))


def test_predict_is_translation_invariant():
    rng = np.random.default_rng(7)
    baselines = rng.normal(size=(3, 8))
    emb = rng.normal(size=(20, 8))
    shift = rng.normal(size=8)
    assert np.array_equal(nearest_baseline(baselines, emb),
                          nearest_baseline(baselines + shift, emb + shift))


# ---------------------------------------------------------------------------
# estimators

def test_siamese_classifier_on_separable_fixture(game_fixture):
    X, y = game_fixture["X"], game_fixture["y"]
    tr, te = game_fixture["train_idx"], game_fixture["test_idx"]
    est = SiameseGutClassifier(seed=0, epochs=60, pairs_per_epoch=200).fit(X[tr], y[tr])
    assert (est.predict(X[tr]) == y[tr]).mean() >= 0.95
    assert (est.predict(X[te]) == y[te]).mean() >= 0.85


def test_embedding_classifier_on_separable_fixture(game_fixture):
    X, y = game_fixture["X"], game_fixture["y"]
    tr = game_fixture["train_idx"]
    est = EmbeddingGutClassifier(seed=0, epochs=60).fit(X[tr], y[tr])
    assert (est.predict(X[tr]) == y[tr]).mean() >= 0.95
    proba = est.predict_proba(X[tr][:5])
    assert np.allclose(proba.sum(axis=1), 1.0)


def test_class_weights_raise_minority_recall():
    means = np.zeros((3, 44))
    means[0, 11:15] = -0.8
    means[2, 15:19] = 0.8
    cfg = synth.scenario_with(synth.default_game_scenario(seed=2), class_means=means)
    records = synth.generate_game_records(cfg, 300)
    X, y = records_to_arrays(records, require_labels=True)
    tr, te = split_indices(y, 0.7, seed=2)
    recalls = {}
    for weights in ((2, 1, 2), (1, 1, 1)):
        est = EmbeddingGutClassifier(class_weights=weights, epochs=120, lr=0.02,
                                     seed=2).fit(X[tr], y[tr])
        scores = evaluate(est.predict(X[te]), y[te])
        recalls[weights] = (scores.recall[0] + scores.recall[2]) / 2
    assert recalls[(2, 1, 2)] > recalls[(1, 1, 1)]


def test_estimators_deterministic(game_fixture):
    X, y = game_fixture["X"], game_fixture["y"]
    tr = game_fixture["train_idx"][:90]
    a = SiameseGutClassifier(seed=4, **FAST).fit(X[tr], y[tr])
    b = SiameseGutClassifier(seed=4, **FAST).fit(X[tr], y[tr])
    assert np.array_equal(a.baselines_, b.baselines_)
    assert np.array_equal(a.predict(X), b.predict(X))


def test_estimators_not_fitted_and_cloneable():
    with pytest.raises(NotFittedError):
        SiameseGutClassifier().predict(np.zeros((2, 44)))
    with pytest.raises(NotFittedError):
        EmbeddingGutClassifier().predict_proba(np.zeros((2, 44)))
    for est in (SiameseGutClassifier(margin=2.0), EmbeddingGutClassifier(lr=0.1)):
        assert clone(est).get_params() == est.get_params()


def test_fit_rejects_missing_class(game_fixture):
    X, y = game_fixture["X"], game_fixture["y"]
    mask = y != 2
    with pytest.raises(ValueError, match="class 2"):
        SiameseGutClassifier(seed=0, **FAST).fit(X[mask], y[mask])


def test_model_json_roundtrip(tmp_path, game_fixture):
    X, y = game_fixture["X"], game_fixture["y"]
    tr = game_fixture["train_idx"][:90]
    for est in (SiameseGutClassifier(seed=0, **FAST),
                EmbeddingGutClassifier(seed=0, epochs=20)):
        est.fit(X[tr], y[tr])
        path = tmp_path / "model.json"
        metric.save_model(est, path)
        loaded = metric.load_model(path)
        assert np.array_equal(loaded.predict(X), est.predict(X))


# ---------------------------------------------------------------------------
# evaluation

def test_evaluate_perfect_predictor():
    y = np.array([0, 1, 2, 1, 0, 2, 1])
    scores = evaluate(y, y)
    assert scores.accuracy == 1.0
    assert scores.macro_precision == scores.macro_recall == scores.macro_f1 == 1.0
    assert np.array_equal(scores.confusion, np.eye(3))


def test_evaluate_single_class_predictor():
    gts = np.array([0, 1, 2] * 4)
    preds = np.ones(12, dtype=int)
    scores = evaluate(preds, gts)
    assert abs(scores.accuracy - 1 / 3) < 1e-12
    assert abs(scores.macro_recall - 1 / 3) < 1e-12


def test_evaluate_rows_sum_to_one():
    rng = np.random.default_rng(1)
    preds = rng.integers(0, 3, 60)
    gts = rng.integers(0, 3, 60)
    scores = evaluate(preds, gts)
    assert np.allclose(scores.confusion.sum(axis=1), 1.0, atol=1e-9)


def test_evaluate_excludes_absent_class():
    gts = np.array([0, 0, 1, 1])
    preds = np.array([0, 1, 1, 2])
    scores = evaluate(preds, gts)
    assert scores.missing_classes == (2,)
    assert math.isnan(scores.recall[2])
    # macro means average only the two present classes
    assert abs(scores.macro_recall - (0.5 + 0.5) / 2) < 1e-12


def test_evaluate_against_hand_count():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(3, 60))
        gts = rng.integers(0, 3, n)
        preds = rng.integers(0, 3, n)
        scores = evaluate(preds, gts)

        counts = [[0] * 3 for _ in range(3)]
        for g, p in zip(gts, preds):
            counts[g][p] += 1
        assert np.array_equal(scores.confusion_counts, counts)
        precisions, recalls, f1s = [], [], []
        for c in range(3):
            support = sum(counts[c])
            if support == 0:
                continue
            predicted = sum(counts[g][c] for g in range(3))
            rec = counts[c][c] / support
            prec = counts[c][c] / predicted if predicted else 0.0
            f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
            precisions.append(prec)
            recalls.append(rec)
            f1s.append(f1)
        assert abs(scores.macro_precision - np.mean(precisions)) < 1e-12
        assert abs(scores.macro_recall - np.mean(recalls)) < 1e-12
        assert abs(scores.macro_f1 - np.mean(f1s)) < 1e-12


def test_metrics_serialization(tmp_path):
    scores = evaluate(np.array([0, 1, 2]), np.array([0, 1, 1]))
    metric.metrics_to_json(scores, tmp_path / "m.json")
    metric.metrics_to_csv(scores, tmp_path / "m.csv")
    loaded = json.loads((tmp_path / "m.json").read_text())
    assert abs(loaded["accuracy"] - 2 / 3) < 1e-12
    assert (tmp_path / "m.csv").read_text().startswith("metric,value")


# ---------------------------------------------------------------------------
# dataset splitting and records

def test_split_sizes_and_determinism():
    y = np.array([0, 0, 0, 1, 1, 1, 1, 2, 2, 2])
    train, test = split_indices(y, 0.7, seed=0)
    assert len(train) == 7 and len(test) == 3
    train2, test2 = split_indices(y, 0.7, seed=0)
    assert np.array_equal(train, train2) and np.array_equal(test, test2)
    assert len(np.intersect1d(train, test)) == 0


def test_split_stratification_preserves_proportions():
    y = np.array([0] * 10 + [1] * 70 + [2] * 20)
    train, test = split_indices(y, 0.7, seed=1)
    counts = np.bincount(y[train], minlength=3)
    for cls, n_cls in ((0, 10), (1, 70), (2, 20)):
        assert abs(counts[cls] - 0.7 * n_cls) <= 1.0


def test_split_falls_back_without_two_members():
    y = np.array([0, 1, 1, 1, 2, 2])  # class 0 has a single member
    train, test = split_indices(y, 0.7, seed=3)
    assert len(train) == 4 and len(test) == 2


def test_record_validation_and_roundtrip(tmp_path):
    with pytest.raises(ValueError, match="team_fight"):
        GamePlayRecord(np.zeros(10), np.zeros(33)).validate()
    with pytest.raises(ValueError, match="score_related"):
        GamePlayRecord(np.zeros(11), np.zeros(30)).validate()
    with pytest.raises(ValueError, match="gut_label"):
        GamePlayRecord(np.zeros(11), np.zeros(33), gut_label=7).validate()

    records = [GamePlayRecord(np.arange(11.0), np.arange(33.0),
                              hero_path=np.array([[0.0, 1.0, 2.0]]),
                              gut_label=1, t=12.5)]
    path = tmp_path / "game.json"
    metric.save_game_records(records, path)
    back = metric.load_game_records(path)
    assert back[0].gut_label == 1 and back[0].t == 12.5
    assert np.array_equal(back[0].team_fight, records[0].team_fight)
    assert np.array_equal(back[0].hero_path, records[0].hero_path)

    X, y = records_to_arrays(back)
    assert X.shape == (1, 44) and y[0] == 1
