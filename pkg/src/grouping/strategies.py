"""
Grouping strategies.

Instances are grouped either by the directions of their individual
counterfactuals (optionally re-split by counterfactual cost) or, as a
baseline, by their positions in encoded instance space.
"""
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, model_validator

from src.core.space import FeatureSpace, Instance
from src.explain.single import CfResult
from src.grouping.dbscan import dbscan_labels
from src.grouping.distances import cost_matrix, direction_matrix, instance_matrix
from src.grouping.kmedoids import sweep_k
from src.grouping.partition import NOISE, Grouping
from src.utils.exceptions import InsufficientDataError
from src.utils.logging import get_logger
from src.utils.models import ConfigModel

logger = get_logger(__name__)


class ClusterStrategy(str, Enum):
    """Enum for grouping strategies."""
    DBSCAN_CF_DIRECTION = "dbscan-cf-direction"
    DBSCAN_INSTANCES = "dbscan-instances"
    KMEDOIDS_CF_DIRECTION = "kmedoids-cf-direction"


class ClusterParams(ConfigModel):
    """Parameters of one grouping strategy."""

    strategy: ClusterStrategy = ClusterStrategy.DBSCAN_CF_DIRECTION
    eps: float = Field(default=0.1, gt=0.0, description="DBSCAN radius")
    min_pts: int = Field(default=5, ge=1, description="DBSCAN core-point neighbour count")
    k_range: Tuple[int, ...] = Field(default=(2, 3, 4, 5, 6, 7, 8), description="Cluster counts for the sweep")
    cost_subcluster: bool = Field(default=False, description="Re-split direction clusters by counterfactual cost")
    cost_eps: float = Field(default=0.1, gt=0.0, description="DBSCAN radius of the cost re-split")
    seed: int = Field(default=0, ge=0, description="Seed of the k-medoids initialisations")

    @model_validator(mode="after")
    def check_k_range(self) -> "ClusterParams":
        if self.strategy == ClusterStrategy.KMEDOIDS_CF_DIRECTION and not self.k_range:
            raise ValueError("k_range must not be empty for the k-medoids strategy")
        return self


def _direction_candidates(cfs: Sequence[CfResult]) -> Tuple[List[int], List[int]]:
    """Split counterfactual indices into clusterable ones and rejects (invalid or all-NoChange)."""
    usable, rejected = [], []
    for index, cf in enumerate(cfs):
        (usable if cf.valid and not cf.delta.is_zero else rejected).append(index)
    if rejected:
        logger.warning("Counterfactuals excluded from clustering", count=len(rejected),
                       indices=rejected[:20])
    return usable, rejected


def _cost_split(cfs: Sequence[CfResult], members: np.ndarray, params: ClusterParams) -> Tuple[List[np.ndarray], List[int]]:
    """Re-split one direction cluster by DBSCAN over counterfactual costs."""
    labels = dbscan_labels(cost_matrix([cfs[int(i)].delta for i in members]), params.cost_eps, params.min_pts)
    parts = [members[labels == c] for c in np.unique(labels[labels != NOISE])]
    return parts, [int(i) for i in members[labels == NOISE]]


def clamp_cluster_counts(k_range: Sequence[int], n: int) -> List[int]:
    """Pull every cluster count into [2, n - 1]; sweep_k rejects counts outside it."""
    ks = sorted(set(min(max(int(k), 2), n - 1) for k in k_range))
    if ks != sorted(set(int(k) for k in k_range)):
        logger.info("Cluster counts clamped", requested=[int(k) for k in k_range], used=ks, points=n)
    return ks


def sweep_cluster_count(space: FeatureSpace, cfs: Sequence[CfResult], k_range: Sequence[int],
                        seed: int = 0) -> Tuple[int, Grouping]:
    """
    Choose the number of direction clusters by the mean silhouette of k-medoids clusterings.

    Invalid or all-NoChange counterfactuals go to noise. Counts outside
    [2, n - 1] for n clusterable counterfactuals are clamped into it.

    Returns:
        (k*, grouping of all counterfactual indices)

    Raises:
        InsufficientDataError: If fewer than three counterfactuals can be clustered
    """
    usable, rejected = _direction_candidates(cfs)
    if len(usable) < 3:
        raise InsufficientDataError(f"at least 3 valid counterfactuals are needed, got {len(usable)}")
    ks = clamp_cluster_counts(k_range, len(usable))
    k, labels = sweep_k(direction_matrix(space, [cfs[i].delta for i in usable]), ks, seed)
    index = np.asarray(usable)
    groups = [index[labels == c] for c in np.unique(labels)]
    grouping = Grouping.build(len(cfs), groups, rejected, {
        "strategy": ClusterStrategy.KMEDOIDS_CF_DIRECTION.value,
        "k_range": [int(v) for v in k_range],
        "k_used": ks,
        "k": int(k),
        "seed": seed,
        "excluded": len(rejected),
    })
    logger.info("Cluster count selected", k=k, counterfactuals=len(usable))
    return k, grouping


def group_by_cf_directions(space: FeatureSpace, cfs: Sequence[CfResult], params: ClusterParams) -> Grouping:
    """
    Group instances by the directions of their individual counterfactuals.

    DBSCAN (or the k-medoids sweep) runs over 1 - cosine distances between the
    encoded deltas. With cost_subcluster set, each direction cluster is split
    again by DBSCAN over the absolute cost difference, and the points it marks
    as noise join the noise set. Invalid counterfactuals go to noise.

    Args:
        space: Feature space of the deltas
        cfs: One individual counterfactual per instance, in instance order
        params: Strategy parameters

    Returns:
        A grouping of the instance indices
    """
    if params.strategy == ClusterStrategy.KMEDOIDS_CF_DIRECTION:
        _, grouping = sweep_cluster_count(space, cfs, params.k_range, params.seed)
        groups, noise = [np.asarray(g) for g in grouping.groups], list(grouping.noise)
    else:
        usable, noise = _direction_candidates(cfs)
        index = np.asarray(usable, dtype=int)
        distances = direction_matrix(space, [cfs[i].delta for i in usable])
        labels = dbscan_labels(distances, params.eps, params.min_pts)
        groups = [index[labels == c] for c in np.unique(labels[labels != NOISE])]
        noise = noise + [int(i) for i in index[labels == NOISE]]

    if params.cost_subcluster:
        split: List[np.ndarray] = []
        for members in groups:
            parts, rejected = _cost_split(cfs, members, params)
            split.extend(parts)
            noise.extend(rejected)
        groups = split

    provenance = params.model_dump(mode="json")
    grouping = Grouping.build(len(cfs), groups, noise, provenance)
    logger.info("Grouped by counterfactual direction", groups=len(grouping.groups), noise=len(grouping.noise),
                strategy=params.strategy.value)
    return grouping


def group_by_instances(space: FeatureSpace, xs: Sequence[Instance], params: Optional[ClusterParams] = None) -> Grouping:
    """DBSCAN over Euclidean distances between encoded instances."""
    params = params or ClusterParams(strategy=ClusterStrategy.DBSCAN_INSTANCES)
    if len(xs) == 0:
        return Grouping.build(0, [], [], params.model_dump(mode="json"))
    labels = dbscan_labels(instance_matrix(space, xs), params.eps, params.min_pts)
    grouping = Grouping.from_labels(labels, params.model_dump(mode="json"))
    logger.info("Grouped by instance position", groups=len(grouping.groups), noise=len(grouping.noise))
    return grouping


def group_instances(space: FeatureSpace, xs: Sequence[Instance], cfs: Sequence[CfResult], params: ClusterParams) -> Grouping:
    """Dispatch on the strategy."""
    if params.strategy == ClusterStrategy.DBSCAN_INSTANCES:
        return group_by_instances(space, xs, params)
    return group_by_cf_directions(space, cfs, params)
