"""Command-line pipeline: extract, label, train, predict, report, synth."""

import argparse
import os
import sys

import numpy as np

from . import dtw, labeler, metric, physio, report, synth
from .config import PipelineConfig


class CliError(Exception):
    pass


def _require_file(path):
    if not os.path.isfile(path):
        raise CliError(f"input file not found: {path}")
    return path


def _load_config(args):
    if getattr(args, "config", None):
        cfg = PipelineConfig.from_json(_require_file(args.config))
    else:
        cfg = PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _say(path):
    print(f"wrote {path}")


def cmd_extract(args):
    cfg = _load_config(args)
    out = _outdir(args)
    path = _require_file(args.session)
    if path.endswith(".json"):
        record = physio.read_physio_manifest(path)
    else:
        record = physio.read_physio_csv(path)
    denoise = physio.DenoiseConfig(smooth_window=cfg.smooth_window)

    if args.role == "video":
        if not args.affect:
            raise CliError("--affect is required when extracting video features")
        matrix = physio.process_video(record, args.affect, config=denoise,
                                      segment_s=cfg.segment_s)
        target = os.path.join(out, "video_features.csv")
        physio.write_video_features_csv([matrix], target)
        _say(target)
        return 0

    sliding, whole, _ = physio.process_session(
        record, config=denoise, window_s=cfg.window_s, step_s=cfg.step_s,
        whole_label=cfg.whole_flow_label, segment_s=cfg.segment_s)
    sliding_path = os.path.join(out, "sliding_features.csv")
    whole_path = os.path.join(out, "whole_features.csv")
    physio.write_feature_csv(sliding, sliding_path)
    physio.write_feature_csv(whole, whole_path)
    _say(sliding_path)
    _say(whole_path)
    return 0


def cmd_label(args):
    cfg = _load_config(args)
    out = _outdir(args)
    sliding = physio.read_feature_csv(_require_file(args.sliding), physio.ROLE_SLIDING,
                                      window_s=cfg.window_s)
    whole = physio.read_feature_csv(_require_file(args.whole), physio.ROLE_WHOLE,
                                    label=cfg.whole_flow_label)
    videos = physio.read_video_features_csv(_require_file(args.videos))

    vm, wm = dtw.build_match_sequences(sliding, videos, whole, labeler.AFFECTS)
    X = np.column_stack([vm.values, wm.values])
    est = cfg.labeler().fit(X)
    timeline = est.predict_timeline(X, window_starts=sliding.window_starts)

    timeline_path = os.path.join(out, "timeline.csv")
    model_path = os.path.join(out, "labeler_model.json")
    timeline.to_csv(timeline_path)
    labeler.save_labeler(est, model_path)
    _say(timeline_path)
    _say(model_path)
    if args.dump_matches:
        for match, name in ((vm, "video_matches.csv"), (wm, "whole_matches.csv")):
            match_path = os.path.join(out, name)
            dtw.write_match_csv(match, match_path)
            _say(match_path)
    return 0


def _labels_for_records(records, timeline_path):
    labels = [r.gut_label for r in records]
    if all(l is not None for l in labels):
        return np.array([int(l) for l in labels])
    if timeline_path is None:
        raise CliError("records lack embedded gut labels; pass --timeline to join them")
    timeline = labeler.read_timeline_csv(_require_file(timeline_path))
    t_axis, states = timeline["t"], timeline["gut"]
    joined = []
    for i, rec in enumerate(records):
        if rec.gut_label is not None:
            joined.append(int(rec.gut_label))
            continue
        if rec.t is None:
            raise CliError(f"record {i} has neither a gut label nor a time to join on")
        idx = int(np.searchsorted(t_axis, rec.t, side="right")) - 1
        joined.append(int(states[min(max(idx, 0), len(states) - 1)]))
    return np.array(joined)


_COMPARISON_ROWS = (
    ("siamese_teamfight", "siamese", False),
    ("fc_personality", "baseline", True),
    ("fc_teamfight", "baseline", False),
    ("siamese_personality", "siamese", True),
)


def _fit_eval(cfg, kind, use_personality, X, y, train_idx, test_idx):
    factory = cfg.siamese if kind == "siamese" else cfg.embedding
    est = factory(use_personality=use_personality)
    est.fit(X[train_idx], y[train_idx])
    return est, metric.evaluate(est.predict(X[test_idx]), y[test_idx])


def cmd_train(args):
    cfg = _load_config(args)
    out = _outdir(args)
    records = metric.load_game_records(_require_file(args.game))
    X, _ = metric.records_to_arrays(records)
    y = _labels_for_records(records, args.timeline)
    if len(np.unique(y)) < 2:
        raise CliError("training needs at least two distinct state labels")
    train_idx, test_idx = metric.split_indices(y, ratio=cfg.split_ratio, seed=cfg.seed)

    if args.mode == "baseline":
        est, scores = _fit_eval(cfg, "baseline", cfg.use_personality, X, y, train_idx, test_idx)
    else:
        est, scores = _fit_eval(cfg, "siamese", cfg.use_personality, X, y, train_idx, test_idx)

    model_path = os.path.join(out, "model.json")
    metrics_json = os.path.join(out, "metrics.json")
    metrics_csv = os.path.join(out, "metrics.csv")
    metric.save_model(est, model_path)
    metric.metrics_to_json(scores, metrics_json)
    metric.metrics_to_csv(scores, metrics_csv)
    _say(model_path)
    _say(metrics_json)
    _say(metrics_csv)

    if args.mode == "compare":
        import csv as _csv

        comparison_path = os.path.join(out, "comparison.csv")
        with open(comparison_path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["method", "accuracy", "macro_precision",
                             "macro_recall", "macro_f1"])
            for name, kind, personality in _COMPARISON_ROWS:
                _, m = _fit_eval(cfg, kind, personality, X, y, train_idx, test_idx)
                writer.writerow([name, repr(m.accuracy), repr(m.macro_precision),
                                 repr(m.macro_recall), repr(m.macro_f1)])
        _say(comparison_path)
    return 0


def cmd_predict(args):
    out = _outdir(args)
    est = metric.load_model(_require_file(args.model))
    records = metric.load_game_records(_require_file(args.game))
    X, _ = metric.records_to_arrays(records)
    preds = est.predict(X)

    import csv as _csv
    import json as _json

    csv_path = os.path.join(out, "predictions.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["record", "t", "gut"])
        for i, (rec, p) in enumerate(zip(records, preds)):
            t = "" if rec.t is None else repr(float(rec.t))
            writer.writerow([i, t, int(p)])
    json_path = os.path.join(out, "predictions.json")
    with open(json_path, "w") as fh:
        _json.dump([int(p) for p in preds], fh)
        fh.write("\n")
    _say(csv_path)
    _say(json_path)
    return 0


def cmd_report(args):
    cfg = _load_config(args)
    out = _outdir(args)
    timeline = labeler.read_timeline_csv(_require_file(args.timeline))
    colors = cfg.color_map()

    curve_path = os.path.join(out, "experience_curve.svg")
    with open(curve_path, "w") as fh:
        fh.write(report.render_experience_curve(timeline["t"], timeline["gut"], colors))
    _say(curve_path)

    heatmap_path = os.path.join(out, "affect_heatmap.csv")
    report.write_affect_heatmap_csv(timeline, heatmap_path)
    _say(heatmap_path)

    if args.game:
        records = metric.load_game_records(_require_file(args.game))
        paths = [r.hero_path for r in records if r.hero_path is not None]
        if paths:
            traj_path = os.path.join(out, "trajectory.svg")
            with open(traj_path, "w") as fh:
                fh.write(report.render_trajectory(paths, timeline["t"], timeline["gut"],
                                                  colors))
            _say(traj_path)
        else:
            print("no hero paths in the game log; trajectory omitted")
    else:
        print("no game log given; trajectory omitted")
    return 0


def cmd_synth(args):
    out = _outdir(args)
    if args.kind in ("physio", "both"):
        cfg = synth.default_labeling_scenario(seed=args.seed)
        record, truth = synth.generate_physio(cfg)
        physio_path = os.path.join(out, "physio.csv")
        physio.write_physio_csv(record, physio_path)
        _say(physio_path)
        truth_path = os.path.join(out, "ground_truth_timeline.csv")
        truth.to_csv(truth_path)
        _say(truth_path)
        videos_path = os.path.join(out, "videos.csv")
        physio.write_video_features_csv(synth.video_feature_matrices(cfg), videos_path)
        _say(videos_path)
    if args.kind in ("game", "both"):
        cfg = synth.default_game_scenario(seed=args.seed)
        records = synth.generate_game_records(cfg, args.n_records)
        game_path = os.path.join(out, "game.json")
        metric.save_game_records(records, game_path)
        _say(game_path)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="guxflow",
        description="Game-UX state analysis from physiological signals and match telemetry.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="windowed features from a physiological session")
    p.add_argument("session", help="combined session CSV or channel manifest JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--role", choices=("game", "video"), default="game")
    p.add_argument("--affect", help="affect label for --role video")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("label", help="train the labeler and emit the per-second timeline")
    p.add_argument("--sliding", required=True)
    p.add_argument("--whole", required=True)
    p.add_argument("--videos", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-matches", action="store_true")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="train the state predictor on game telemetry")
    p.add_argument("--game", required=True)
    p.add_argument("--timeline")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("siamese", "baseline", "compare"), default="siamese")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict states for unlabeled telemetry")
    p.add_argument("--model", required=True)
    p.add_argument("--game", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="static SVG/CSV report from a timeline")
    p.add_argument("--timeline", required=True)
    p.add_argument("--game")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate synthetic fixture data")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("physio", "game", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-records", type=int, default=300)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
