"""
Distances used for grouping: direction of counterfactuals, their cost, and instance positions.
"""
from typing import Optional, Sequence

import numpy as np

from src.classifiers.encoding import Encoding
from src.core.delta import Delta, delta_cost, delta_to_genome
from src.core.space import FeatureSpace, Instance
from src.utils.exceptions import UndefinedDirectionError


def direction_vectors(space: FeatureSpace, deltas: Sequence[Delta]) -> np.ndarray:
    """
    Encoded direction of each delta.

    Numeric offsets pass through; a categorical assignment is the unit axis of
    the assigned category.

    Raises:
        UndefinedDirectionError: If a delta encodes to the zero vector
    """
    genomes = np.vstack([delta_to_genome(space, d) for d in deltas])
    vectors = Encoding.for_space(space).direction(genomes)
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise UndefinedDirectionError(f"delta {int(zero[0])} has no direction (all features unchanged)")
    return vectors


def direction_matrix(space: FeatureSpace, deltas: Sequence[Delta]) -> np.ndarray:
    """Pairwise 1 - cosine similarity between delta directions, in [0, 2]."""
    if len(deltas) == 0:
        return np.zeros((0, 0))
    vectors = direction_vectors(space, deltas)
    units = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    distances = np.clip(1.0 - units @ units.T, 0.0, 2.0)
    np.fill_diagonal(distances, 0.0)
    # Symmetric by construction; rounding in the product can break it slightly
    return (distances + distances.T) / 2.0


def direction_distance(space: FeatureSpace, d1: Delta, d2: Delta) -> float:
    """
    1 - cosine similarity of two delta directions.

    Examples: (1, 0) vs (2, 0) -> 0.0; (1, 0) vs (0, 1) -> 1.0; (1, 0) vs (-1, 0) -> 2.0.

    Raises:
        UndefinedDirectionError: If either delta is all-NoChange
    """
    return float(direction_matrix(space, [d1, d2])[0, 1])


def cost_distance(d1: Delta, d2: Delta, weights: Optional[Sequence[float]] = None) -> float:
    """Absolute difference of the two delta costs."""
    return abs(delta_cost(d1, weights) - delta_cost(d2, weights))


def cost_matrix(deltas: Sequence[Delta], weights: Optional[Sequence[float]] = None) -> np.ndarray:
    costs = np.array([delta_cost(d, weights) for d in deltas], dtype=float)
    return np.abs(costs[:, None] - costs[None, :])


def euclidean_matrix(points: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between the rows of an (n, D) array."""
    squared = (points ** 2).sum(axis=1)
    gram = squared[:, None] + squared[None, :] - 2.0 * points @ points.T
    distances = np.sqrt(np.maximum(gram, 0.0))
    np.fill_diagonal(distances, 0.0)
    return (distances + distances.T) / 2.0


def instance_matrix(space: FeatureSpace, xs: Sequence[Instance]) -> np.ndarray:
    """Pairwise Euclidean distances between instances in encoded space."""
    if len(xs) == 0:
        return np.zeros((0, 0))
    return euclidean_matrix(Encoding.for_space(space).transform(space.to_codes(xs)))
