"""
Trainer dispatch by model kind.
"""
from src.classifiers.base import Classifier, LabeledData, ModelKind, TrainConfig
from src.classifiers.boosting import train_tree_ensemble
from src.classifiers.linear import train_linear
from src.core.space import FeatureSpace


def train_model(space: FeatureSpace, data: LabeledData, cfg: TrainConfig) -> Classifier:
    """Train the model family selected by cfg.kind."""
    if cfg.kind == ModelKind.LINEAR:
        return train_linear(space, data, cfg)
    return train_tree_ensemble(space, data, cfg)
