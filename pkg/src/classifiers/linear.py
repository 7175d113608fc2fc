"""
Logistic-regression classifier with an exposed linear decision function.
"""
from typing import Optional, Sequence

import numpy as np

from src.classifiers.base import (
    Classifier,
    LabeledData,
    LinearView,
    ModelKind,
    TrainConfig,
    binary_targets,
    sigmoid,
)
from src.classifiers.encoding import Encoding
from src.core.space import FeatureSpace
from src.utils.exceptions import SchemaMismatchError
from src.utils.logging import get_logger

logger = get_logger(__name__)


class LogisticModel(Classifier):
    """Linear binary classifier: predicts label_set[1] iff w·encode(x) + b > 0."""

    kind = ModelKind.LINEAR

    def __init__(self, space: FeatureSpace, weights: Sequence[float], bias: float):
        super().__init__(space)
        self._w = np.asarray(weights, dtype=float)
        if self._w.shape != (self.encoding.dimension,):
            raise SchemaMismatchError(
                f"expected {self.encoding.dimension} weights, got {self._w.shape[0]}"
            )
        self._b = float(bias)

    @property
    def linear_view(self) -> Optional[LinearView]:
        return LinearView(weights=tuple(float(v) for v in self._w), bias=self._b)

    def margin_codes(self, codes: np.ndarray) -> np.ndarray:
        return self.encoding.transform(codes) @ self._w + self._b


def train_linear(space: FeatureSpace, data: LabeledData, cfg: TrainConfig) -> LogisticModel:
    """
    Fit an L2-regularised logistic regression by full-batch gradient descent.

    Features are standardised internally and the solution is mapped back to
    the raw encoded space, so the returned weights act on encode(x) directly.

    Args:
        space: Feature space with a binary label set
        data: Training instances and labels
        cfg: Training configuration

    Returns:
        The trained model

    Raises:
        DegenerateTrainingError: If only one class is present
    """
    targets = binary_targets(space, data)
    encoded = Encoding.for_space(space).transform(space.to_codes(data.instances))

    mean = encoded.mean(axis=0)
    scale = encoded.std(axis=0)
    scale[scale == 0.0] = 1.0
    standardized = (encoded - mean) / scale

    n = standardized.shape[0]
    w = np.zeros(standardized.shape[1])
    b = 0.0
    for _ in range(cfg.iterations):
        residual = sigmoid(standardized @ w + b) - targets
        w -= cfg.learning_rate * (standardized.T @ residual / n + cfg.regularization * w)
        b -= cfg.learning_rate * residual.mean()

    raw_w = w / scale
    raw_b = b - float(raw_w @ mean)
    trained = LogisticModel(space, raw_w, raw_b)
    accuracy = float(np.mean(trained.predict_index_codes(space.to_codes(data.instances)) == targets))
    logger.info("Trained linear model", instances=n, iterations=cfg.iterations, train_accuracy=accuracy)
    return trained

