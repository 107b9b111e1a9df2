"""Game-UX state analysis from multimodal physiological signals and match telemetry."""

from .dtw import DtwDistance, MatchSequence, build_match_sequences, dtw_distance
from .gut import GutParams, axis_distance, classify, gux_value, in_tunnel, \
    motivation_delta, net_force_direction
from .labeler import AFFECTS, DeepDtwLabeler, ExperienceTimeline, LabelerNetwork, \
    label_session, labeler_loss, pearson, train_labeler
from .metric import EmbeddingGutClassifier, EmbeddingNetwork, GamePlayRecord, \
    SiameseGutClassifier, contrastive_loss, evaluate, make_pairs, split_indices, \
    weighted_ce_loss
from .physio import DenoiseConfig, FeatureMatrix, PhysioRecord, RrSeries, \
    denoise_and_normalize, detect_r_peaks, extract_features, hrv_features
from .synth import ScenarioConfig, generate_game_records, generate_physio, oracle_gut

__version__ = "0.1.0"

__all__ = [
    "AFFECTS", "DeepDtwLabeler", "DenoiseConfig", "DtwDistance",
    "EmbeddingGutClassifier", "EmbeddingNetwork", "ExperienceTimeline",
    "FeatureMatrix", "GamePlayRecord", "GutParams", "LabelerNetwork",
    "MatchSequence", "PhysioRecord", "RrSeries", "ScenarioConfig",
    "SiameseGutClassifier", "axis_distance", "build_match_sequences", "classify",
    "contrastive_loss", "denoise_and_normalize", "detect_r_peaks", "dtw_distance",
    "evaluate", "extract_features", "generate_game_records", "generate_physio",
    "gux_value", "hrv_features", "in_tunnel", "label_session", "labeler_loss",
    "make_pairs",
    "motivation_delta", "net_force_direction", "oracle_gut", "pearson",
    "split_indices", "train_labeler", "weighted_ce_loss",
]
