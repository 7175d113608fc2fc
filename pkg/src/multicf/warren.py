"""
Max-coverage baseline: pick the individual counterfactual that serves most of the group.
"""
from typing import Optional, Sequence

import numpy as np

from src.classifiers.base import Classifier
from src.core.delta import delta_cost, delta_to_genome
from src.core.space import Instance, Label
from src.explain.single import CfResult
from src.multicf.evolution import EaConfig, GroupProblem, MultiCfResult
from src.utils.exceptions import EmptyGroupError
from src.utils.logging import get_logger
from src.utils.seeding import make_rng

logger = get_logger(__name__)


def warren_max_coverage(cfs: Sequence[CfResult], group: Sequence[Instance], m: Classifier, y_cf: Label,
                        max_candidates: Optional[int] = None, seed: int = 0, C: float = 100.0) -> MultiCfResult:
    """
    Apply every candidate delta to every group member and keep the one valid for most members.

    Infeasible applications count as invalid for that member. Ties go to the
    lower delta_cost, then to the lower candidate index.

    Args:
        cfs: Individual counterfactuals of the group members
        group: The instances
        m: The classifier
        y_cf: Target label
        max_candidates: Evaluate only a seeded sample of this many candidates
        seed: Seed of the candidate sample
        C: Loss weight used for the reported fitness value

    Returns:
        The chosen delta with its validity vector

    Raises:
        EmptyGroupError: If there are no candidates or no instances
    """
    if len(cfs) == 0:
        raise EmptyGroupError("no candidate counterfactuals")
    if len(group) == 0:
        raise EmptyGroupError("cannot evaluate candidates on an empty group")

    space = m.space
    candidates = np.arange(len(cfs))
    if max_candidates is not None and max_candidates < len(cfs):
        candidates = np.sort(make_rng(seed).choice(len(cfs), size=max_candidates, replace=False))

    deltas = [cfs[int(i)].delta for i in candidates]
    genomes = np.vstack([delta_to_genome(space, d) for d in deltas])
    problem = GroupProblem(m, space.to_codes(group), space.label_index(y_cf), EaConfig(C=C))
    fitness, validity = problem.evaluate(genomes)
    coverage = validity.sum(axis=1)
    costs = np.array([delta_cost(d) for d in deltas])

    best = int(np.lexsort((candidates, costs, -coverage))[0])
    result = MultiCfResult(
        delta=deltas[best],
        validity=tuple(bool(v) for v in validity[best]),
        correctness=float(validity[best].mean()),
        cost=float(costs[best]),
        fitness=float(fitness[best]),
    )
    logger.debug("Max-coverage candidate chosen", candidates=len(deltas), index=int(candidates[best]),
                 coverage=int(coverage[best]), group_size=len(group))
    return result
