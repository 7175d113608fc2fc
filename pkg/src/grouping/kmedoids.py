"""
k-medoids over a distance matrix and silhouette-based choice of the cluster count.
"""
from typing import Iterable, Tuple

import numpy as np

from src.utils.exceptions import InsufficientDataError, PreconditionError
from src.utils.logging import get_logger
from src.utils.seeding import make_rng

logger = get_logger(__name__)

RESTARTS = 4
MAX_ITERATIONS = 100


def _build_medoids(distances: np.ndarray, k: int) -> np.ndarray:
    """Greedy initialisation: each new medoid is the one that lowers the total distance most."""
    medoids = [int(np.argmin(distances.sum(axis=1)))]
    nearest = distances[medoids[0]].copy()
    for _ in range(1, k):
        gain = np.maximum(nearest[None, :] - distances, 0.0).sum(axis=1)
        gain[medoids] = -1.0
        chosen = int(np.argmax(gain))
        medoids.append(chosen)
        nearest = np.minimum(nearest, distances[chosen])
    return np.array(medoids)


def _sampled_medoids(distances: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-medoids++ initialisation: sample proportionally to the distance to the nearest medoid."""
    n = distances.shape[0]
    medoids = [int(rng.integers(n))]
    nearest = distances[medoids[0]].copy()
    for _ in range(1, k):
        weights = nearest.copy()
        weights[medoids] = 0.0
        total = weights.sum()
        if total <= 0.0:
            remaining = np.setdiff1d(np.arange(n), medoids)
            chosen = int(remaining[0])
        else:
            chosen = int(rng.choice(n, p=weights / total))
        medoids.append(chosen)
        nearest = np.minimum(nearest, distances[chosen])
    return np.array(medoids)


def _refine(distances: np.ndarray, medoids: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Alternate assignment and medoid update until the medoids stop changing."""
    for _ in range(MAX_ITERATIONS):
        labels = np.argmin(distances[:, medoids], axis=1)
        updated = medoids.copy()
        for cluster in range(medoids.shape[0]):
            members = np.nonzero(labels == cluster)[0]
            if members.size == 0:
                continue
            within = distances[np.ix_(members, members)].sum(axis=1)
            updated[cluster] = members[int(np.argmin(within))]
        if np.array_equal(updated, medoids):
            break
        medoids = updated
    labels = np.argmin(distances[:, medoids], axis=1)
    total = float(distances[np.arange(distances.shape[0]), medoids[labels]].sum())
    return labels, medoids, total


def kmedoids(distances: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """
    Partition n points into k clusters around medoids.

    The greedy initialisation and RESTARTS - 1 seeded k-medoids++
    initialisations are refined; the lowest total distance wins (earliest on ties).

    Args:
        distances: (n, n) distance matrix
        k: Number of clusters, 1 <= k <= n
        seed: Seed of the sampled initialisations

    Returns:
        (n,) cluster labels in [0, k)
    """
    n = distances.shape[0]
    if not 1 <= k <= n:
        raise PreconditionError(f"k must lie in [1, {n}], got {k}")
    rng = make_rng(seed)
    best_labels, _, best_total = _refine(distances, _build_medoids(distances, k))
    for _ in range(RESTARTS - 1):
        labels, _, total = _refine(distances, _sampled_medoids(distances, k, rng))
        if total < best_total:
            best_labels, best_total = labels, total
    return best_labels


def silhouette(distances: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette score; 0.0 when fewer than two clusters are present."""
    clusters = np.unique(labels)
    if clusters.size < 2:
        return 0.0
    scores = np.zeros(labels.shape[0])
    for i in range(labels.shape[0]):
        own = labels == labels[i]
        if own.sum() == 1:
            continue
        a = distances[i, own].sum() / (own.sum() - 1)
        b = min(distances[i, labels == c].mean() for c in clusters if c != labels[i])
        largest = max(a, b)
        scores[i] = 0.0 if largest == 0.0 else (b - a) / largest
    return float(scores.mean())


def sweep_k(distances: np.ndarray, k_range: Iterable[int], seed: int = 0) -> Tuple[int, np.ndarray]:
    """
    Run k-medoids for every k and keep the clustering with the highest mean silhouette.

    Ties go to the smaller k. A single k is returned without comparison.

    Raises:
        InsufficientDataError: With fewer than three points
        PreconditionError: If a k lies outside [2, n - 1] or the range is empty
    """
    n = distances.shape[0]
    if n < 3:
        raise InsufficientDataError(f"at least 3 counterfactuals are needed to choose a cluster count, got {n}")
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise PreconditionError("empty cluster-count range")
    if ks[0] < 2 or ks[-1] > n - 1:
        raise PreconditionError(f"cluster counts must lie in [2, {n - 1}], got {ks}")

    if len(ks) == 1:
        return ks[0], kmedoids(distances, ks[0], seed)
    best_k, best_labels, best_score = ks[0], None, -np.inf
    for k in ks:
        labels = kmedoids(distances, k, seed)
        score = silhouette(distances, labels)
        logger.debug("Cluster count evaluated", k=k, silhouette=score)
        if score > best_score:
            best_k, best_labels, best_score = k, labels, score
    return best_k, best_labels
