"""
Gradient-boosted ensemble of depth-limited regression trees on the logistic loss.

Each round fits a tree to the gradient/hessian of the logistic loss at the
current margins (second-order split gain and Newton leaf values), then adds
it with constant shrinkage. There is no row or column subsampling, so
training is deterministic.
"""
from typing import List, Tuple

import numpy as np

from src.classifiers.base import Classifier, LabeledData, ModelKind, TrainConfig, binary_targets, sigmoid
from src.classifiers.encoding import Encoding
from src.core.space import FeatureSpace
from src.utils.logging import get_logger
from src.utils.models import FrozenModel

logger = get_logger(__name__)

# Children lighter than this hessian mass are not created
MIN_CHILD_WEIGHT = 1e-6
LEAF = -1


class TreeParameters(FrozenModel):
    """Flat array form of one regression tree; leaves have feature == -1."""

    feature: Tuple[int, ...]
    threshold: Tuple[float, ...]
    left: Tuple[int, ...]
    right: Tuple[int, ...]
    value: Tuple[float, ...]


class RegressionTree:
    """Binary regression tree over encoded vectors: go left iff z[feature] <= threshold."""

    def __init__(self, params: TreeParameters):
        self.params = params
        self._feature = np.asarray(params.feature, dtype=int)
        self._threshold = np.asarray(params.threshold, dtype=float)
        self._left = np.asarray(params.left, dtype=int)
        self._right = np.asarray(params.right, dtype=int)
        self._value = np.asarray(params.value, dtype=float)
        self._depth = _tree_depth(self._feature, self._left, self._right)

    @classmethod
    def fit(cls, encoded: np.ndarray, grad: np.ndarray, hess: np.ndarray, depth: int, lam: float) -> "RegressionTree":
        """
        Grow a tree greedily to the given depth.

        Args:
            encoded: (n, D) training vectors
            grad: First derivatives of the loss at the current margins
            hess: Second derivatives of the loss at the current margins
            depth: Maximum depth
            lam: L2 penalty on leaf values
        """
        nodes: List[List[float]] = []

        def grow(rows: np.ndarray, level: int) -> int:
            node = len(nodes)
            g_sum = float(grad[rows].sum())
            h_sum = float(hess[rows].sum())
            nodes.append([LEAF, 0.0, LEAF, LEAF, -g_sum / (h_sum + lam)])
            if level >= depth or rows.shape[0] < 2:
                return node
            split = _best_split(encoded[rows], grad[rows], hess[rows], lam)
            if split is None:
                return node
            column, threshold = split
            goes_left = encoded[rows, column] <= threshold
            left = grow(rows[goes_left], level + 1)
            right = grow(rows[~goes_left], level + 1)
            nodes[node][:4] = [column, threshold, left, right]
            return node

        grow(np.arange(encoded.shape[0]), 0)
        return cls(
            TreeParameters(
                feature=tuple(int(n[0]) for n in nodes),
                threshold=tuple(float(n[1]) for n in nodes),
                left=tuple(int(n[2]) for n in nodes),
                right=tuple(int(n[3]) for n in nodes),
                value=tuple(float(n[4]) for n in nodes),
            )
        )

    def predict(self, encoded: np.ndarray) -> np.ndarray:
        """Leaf values for (..., D) vectors."""
        flat = encoded.reshape(-1, encoded.shape[-1])
        node = np.zeros(flat.shape[0], dtype=int)
        rows = np.arange(flat.shape[0])
        for _ in range(self._depth):
            feature = self._feature[node]
            internal = feature != LEAF
            column = np.where(internal, feature, 0)
            goes_left = flat[rows, column] <= self._threshold[node]
            node = np.where(internal, np.where(goes_left, self._left[node], self._right[node]), node)
        return self._value[node].reshape(encoded.shape[:-1])


def _tree_depth(feature: np.ndarray, left: np.ndarray, right: np.ndarray) -> int:
    depth = 0
    frontier = [(0, 0)]
    while frontier:
        node, level = frontier.pop()
        depth = max(depth, level)
        if feature[node] != LEAF:
            frontier.append((int(left[node]), level + 1))
            frontier.append((int(right[node]), level + 1))
    return depth


def _best_split(encoded: np.ndarray, grad: np.ndarray, hess: np.ndarray, lam: float):
    """Best (column, threshold) by second-order gain, or None if no split improves the loss."""
    g_total = grad.sum()
    h_total = hess.sum()
    parent = g_total ** 2 / (h_total + lam)
    best_gain = 1e-12
    best = None
    for column in range(encoded.shape[1]):
        order = np.argsort(encoded[:, column], kind="stable")
        values = encoded[order, column]
        g_left = np.cumsum(grad[order])[:-1]
        h_left = np.cumsum(hess[order])[:-1]
        g_right = g_total - g_left
        h_right = h_total - h_left
        valid = (values[:-1] < values[1:]) & (h_left >= MIN_CHILD_WEIGHT) & (h_right >= MIN_CHILD_WEIGHT)
        if not np.any(valid):
            continue
        gain = g_left ** 2 / (h_left + lam) + g_right ** 2 / (h_right + lam) - parent
        gain = np.where(valid, gain, -np.inf)
        position = int(np.argmax(gain))
        if gain[position] > best_gain:
            best_gain = float(gain[position])
            best = (column, float((values[position] + values[position + 1]) / 2.0))
    return best


class TreeEnsembleModel(Classifier):
    """Boosted trees; margin = base_score + learning_rate · Σ tree(encode(x))."""

    kind = ModelKind.TREES

    def __init__(self, space: FeatureSpace, base_score: float, learning_rate: float, trees: List[RegressionTree]):
        super().__init__(space)
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.trees = list(trees)

    def margin_codes(self, codes: np.ndarray) -> np.ndarray:
        encoded = self.encoding.transform(codes)
        margin = np.full(encoded.shape[:-1], self.base_score)
        for tree in self.trees:
            margin += self.learning_rate * tree.predict(encoded)
        return margin


def train_tree_ensemble(space: FeatureSpace, data: LabeledData, cfg: TrainConfig) -> TreeEnsembleModel:
    """
    Fit a gradient-boosted tree ensemble on the logistic loss.

    Args:
        space: Feature space with a binary label set
        data: Training instances and labels
        cfg: Training configuration (trees, depth, learning_rate, regularization)

    Returns:
        The trained model

    Raises:
        DegenerateTrainingError: If only one class is present
    """
    targets = binary_targets(space, data)
    encoded = Encoding.for_space(space).transform(space.to_codes(data.instances))

    positive_rate = float(targets.mean())
    base_score = float(np.log(positive_rate / (1.0 - positive_rate)))
    margin = np.full(targets.shape[0], base_score)

    trees = []
    for _ in range(cfg.trees):
        probability = sigmoid(margin)
        grad = probability - targets
        hess = probability * (1.0 - probability)
        tree = RegressionTree.fit(encoded, grad, hess, cfg.depth, cfg.regularization)
        trees.append(tree)
        margin = margin + cfg.learning_rate * tree.predict(encoded)

    model = TreeEnsembleModel(space, base_score, cfg.learning_rate, trees)
    accuracy = float(np.mean((margin > 0.0) == (targets == 1.0)))
    logger.info("Trained tree ensemble", instances=targets.shape[0], trees=cfg.trees, depth=cfg.depth,
                train_accuracy=accuracy)
    return model
