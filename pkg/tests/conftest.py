import numpy as np
import pytest

from guxflow import dtw, labeler, metric, physio, synth


@pytest.fixture(scope="session")
def labeling_run():
    """Full labeling pipeline on the seeded synthetic session (seed 1)."""
    cfg = synth.default_labeling_scenario(seed=1)
    record, truth = synth.generate_physio(cfg)
    denoised = physio.denoise_and_normalize(record)
    rr = physio.detect_r_peaks(denoised.channels["ecg"], denoised.sample_rates["ecg"])
    sliding = physio.extract_features(denoised, rr, physio.ROLE_SLIDING)
    whole = physio.extract_features(denoised, rr, physio.ROLE_WHOLE, label=True)
    videos = synth.video_feature_matrices(cfg)
    vm, wm = dtw.build_match_sequences(sliding, videos, whole, labeler.AFFECTS)
    X = np.column_stack([vm.values, wm.values])
    est = labeler.DeepDtwLabeler(seed=1).fit(X)
    timeline = est.predict_timeline(X, window_starts=sliding.window_starts)
    return {
        "cfg": cfg, "record": record, "truth": truth, "rr": rr,
        "sliding": sliding, "whole": whole, "videos": videos,
        "vm": vm, "wm": wm, "X": X, "est": est, "timeline": timeline,
    }


@pytest.fixture(scope="session")
def game_fixture():
    """Seeded separable telemetry fixture (300 records, 15/70/15)."""
    cfg = synth.default_game_scenario(seed=0)
    records = synth.generate_game_records(cfg, 300)
    X, y = metric.records_to_arrays(records, require_labels=True)
    train_idx, test_idx = metric.split_indices(y, ratio=0.7, seed=0)
    return {"cfg": cfg, "records": records, "X": X, "y": y,
            "train_idx": train_idx, "test_idx": test_idx}
