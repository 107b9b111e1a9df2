"""Single JSON-backed configuration shared by the command-line pipeline."""

import dataclasses
import json
from dataclasses import dataclass, field

from .gut import GutParams
from .labeler import DeepDtwLabeler
from .metric import EmbeddingGutClassifier, SiameseGutClassifier


def _default_colors():
    # state 2 / 1 / 0 drawn dark / medium / light
    return {"2": "#1f3b73", "1": "#5b8ac5", "0": "#cfe0f2"}


@dataclass
class PipelineConfig:
    # feature extraction
    smooth_window: int = 5
    window_s: float = 10.0
    step_s: float = 1.0
    segment_s: float = 60.0
    # labeling
    hidden: int = 16
    steps: int = 1000
    lr: float = 0.01
    loss_c: float = 1.4
    threshold: float = 0.5
    surprise_positive: bool = True
    whole_flow_label: bool = True
    calibrate: bool = True
    # tunnel model
    tunnel_c: float = 1.0
    force_k: float = 1.0
    motivation_d: int = 2
    # metric learning
    margin: float = 1.0
    metric_lr: float = 0.05
    epochs: int = 200
    pairs_per_epoch: int = None
    embed_dim: int = 8
    use_personality: bool = True
    split_ratio: float = 0.7
    # shared
    seed: int = 0
    colors: dict = field(default_factory=_default_colors)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**raw)

    def gut_params(self):
        return GutParams(k=self.force_k, c=self.tunnel_c, d=self.motivation_d).validate()

    def color_map(self):
        return {int(k): v for k, v in self.colors.items()}

    def labeler(self, seed=None):
        return DeepDtwLabeler(
            hidden=self.hidden, steps=self.steps, lr=self.lr, loss_c=self.loss_c,
            seed=self.seed if seed is None else seed,
            surprise_positive=self.surprise_positive,
            whole_flow_label=self.whole_flow_label,
            calibrate=self.calibrate,
            threshold=self.threshold, gut_params=self.gut_params(),
        )

    def siamese(self, seed=None, use_personality=None):
        return SiameseGutClassifier(
            margin=self.margin, lr=self.metric_lr, epochs=self.epochs,
            pairs_per_epoch=self.pairs_per_epoch, embed_dim=self.embed_dim,
            use_personality=self.use_personality if use_personality is None else use_personality,
            seed=self.seed if seed is None else seed,
        )

    def embedding(self, seed=None, use_personality=None):
        return EmbeddingGutClassifier(
            lr=self.metric_lr, epochs=self.epochs,
            use_personality=self.use_personality if use_personality is None else use_personality,
            seed=self.seed if seed is None else seed,
        )
