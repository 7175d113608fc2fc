"""
Density-based clustering over a precomputed distance matrix.

Determinism rule: core points are visited in index order, so clusters are
numbered by their lowest core point; a border point reachable from several
clusters joins the lowest-numbered one.
"""
from collections import deque
from typing import Callable, Sequence, TypeVar

import numpy as np

from src.grouping.partition import NOISE, Grouping
from src.utils.exceptions import PreconditionError

T = TypeVar("T")


def _check(eps: float, min_pts: int) -> None:
    if not eps > 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise PreconditionError(f"min_pts must be at least 1, got {min_pts}")


def dbscan_labels(distances: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """
    Cluster labels from a symmetric distance matrix.

    A point is core when at least min_pts points (itself included) lie within
    distance eps. Clusters are the connected components of core points plus
    the border points next to them; everything else is noise.

    Args:
        distances: (n, n) distance matrix
        eps: Neighbourhood radius (inclusive)
        min_pts: Neighbour count for a core point

    Returns:
        (n,) labels; clusters numbered from 0, NOISE (-1) for noise
    """
    _check(eps, min_pts)
    n = distances.shape[0]
    neighbors = distances <= eps
    core = neighbors.sum(axis=1) >= min_pts
    labels = np.full(n, NOISE, dtype=int)

    cluster = 0
    for start in np.nonzero(core)[0]:
        if labels[start] != NOISE:
            continue
        labels[start] = cluster
        queue = deque([start])
        while queue:
            point = queue.popleft()
            for other in np.nonzero(neighbors[point] & core)[0]:
                if labels[other] == NOISE:
                    labels[other] = cluster
                    queue.append(other)
        cluster += 1

    for point in np.nonzero(~core)[0]:
        reachable = labels[neighbors[point] & core]
        if reachable.size:
            labels[point] = int(reachable.min())
    return labels


def pairwise(points: Sequence[T], dist: Callable[[T, T], float]) -> np.ndarray:
    """Distance matrix of arbitrary items under a distance function."""
    n = len(points)
    distances = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            distances[i, j] = distances[j, i] = dist(points[i], points[j])
    return distances


def dbscan(points: Sequence[T], dist: Callable[[T, T], float], eps: float, min_pts: int) -> Grouping:
    """DBSCAN over arbitrary items; see dbscan_labels for the rules."""
    labels = dbscan_labels(pairwise(points, dist), eps, min_pts)
    return Grouping.from_labels(labels, {"strategy": "dbscan", "eps": eps, "min_pts": min_pts})
