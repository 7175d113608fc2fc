"""
Uniform classifier interface and training configuration.
"""
from abc import ABC, abstractmethod
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field

from src.classifiers.encoding import Encoding
from src.core.space import FeatureSpace, Instance, Label
from src.utils.exceptions import DegenerateTrainingError, PreconditionError
from src.utils.models import ConfigModel, FrozenModel


class ModelKind(str, Enum):
    """Enum for the trainable model families."""
    LINEAR = "linear"
    TREES = "trees"


class TrainConfig(ConfigModel):
    """Hyperparameters shared by both trainers."""

    kind: ModelKind = Field(default=ModelKind.TREES, description="Model family")
    learning_rate: float = Field(default=0.3, gt=0, description="Step size (shrinkage for trees)")
    iterations: int = Field(default=500, ge=1, description="Gradient steps of the linear trainer")
    trees: int = Field(default=50, ge=1, description="Boosting rounds")
    depth: int = Field(default=3, ge=1, description="Maximum tree depth")
    regularization: float = Field(default=1e-3, gt=0, description="L2 strength (linear) / leaf lambda (trees)")
    seed: int = Field(default=0, ge=0, description="RNG seed")


class LabeledData(FrozenModel):
    """Instances with their labels, in matching order."""

    instances: Tuple[Instance, ...]
    labels: Tuple[Label, ...]


class LinearView(FrozenModel):
    """Decision function w·z + b over the encoded space."""

    weights: Tuple[float, ...]
    bias: float

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


class Classifier(ABC):
    """
    Prediction function h: X -> Y over a feature space.

    Binary models predict label_set[1] iff their margin is strictly positive.
    """

    kind: ModelKind

    def __init__(self, space: FeatureSpace):
        self.space = space
        self.encoding = Encoding.for_space(space)
        self._coded = space.coded()

    @abstractmethod
    def margin_codes(self, codes: np.ndarray) -> np.ndarray:
        """Raw score for coded instances of shape (..., d); positive favours label_set[1]."""

    @property
    def linear_view(self) -> Optional[LinearView]:
        return None

    def predict_index_codes(self, codes: np.ndarray) -> np.ndarray:
        """Predicted label indices for coded instances."""
        return (self.margin_codes(codes) > 0.0).astype(int)

    def predict(self, x: Instance) -> Label:
        """Predict a single instance."""
        codes = self.space.to_codes([x])
        return self.space.label_set[int(self.predict_index_codes(codes)[0])]

    def margin(self, x: Instance) -> float:
        return float(self.margin_codes(self.space.to_codes([x]))[0])


def predict_batch(model: Classifier, xs: Sequence[Instance]) -> List[Label]:
    """
    Predict a list of instances, preserving order.

    Args:
        model: The classifier
        xs: Instances to predict

    Returns:
        One label per instance
    """
    if len(xs) == 0:
        return []
    indices = model.predict_index_codes(model.space.to_codes(xs))
    return [model.space.label_set[int(i)] for i in indices]


def binary_targets(space: FeatureSpace, data: LabeledData) -> np.ndarray:
    """
    Map labels to {0, 1} and check that both classes are present.

    Raises:
        PreconditionError: If the label set is not binary or lengths differ
        DegenerateTrainingError: If fewer than two instances or only one class is present
    """
    if not space.is_binary:
        raise PreconditionError(f"binary label set required, got {list(space.label_set)}")
    if len(data.instances) != len(data.labels):
        raise PreconditionError("instances and labels differ in length")
    if len(data.instances) < 2:
        raise DegenerateTrainingError("at least two instances are required")
    targets = np.array([space.label_index(label) for label in data.labels], dtype=float)
    if np.all(targets == targets[0]):
        raise DegenerateTrainingError(f"only one class present: {space.label_set[int(targets[0])]}")
    return targets


def sigmoid(values: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(values, -500.0, 500.0)))
