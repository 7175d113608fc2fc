"""
Evaluation metrics: correctness of a shared counterfactual and its normalised cost.
"""
from typing import Sequence

import numpy as np

from src.classifiers.base import Classifier
from src.core.delta import Delta, apply_genomes, delta_to_genome, sparsity_cost
from src.core.space import FeatureSpace, Instance, Label


def group_validity(delta: Delta, group: Sequence[Instance], m: Classifier, y_cf: Label) -> np.ndarray:
    """Per-member validity of a delta; infeasible applications are invalid."""
    space = m.space
    if len(group) == 0:
        return np.zeros(0, dtype=bool)
    genome = delta_to_genome(space, delta)[None, :]
    applied, feasible = apply_genomes(space.coded(), space.to_codes(group), genome)
    return feasible[0] & (m.predict_index_codes(applied)[0] == space.label_index(y_cf))


def group_correctness(delta: Delta, group: Sequence[Instance], m: Classifier, y_cf: Label) -> float:
    """Fraction of members mapped to y_cf by the delta."""
    validity = group_validity(delta, group, m, y_cf)
    return float(validity.mean()) if validity.size else 0.0


def correctness_metric(deltas: Sequence[Delta], groups: Sequence[Sequence[Instance]], m: Classifier,
                       y_cf: Label) -> float:
    """
    Pooled correctness over several groups, one delta per group.

    The per-group fractions are weighted by group size, so the value equals
    the fraction of all instances whose changed prediction is y_cf.

    Examples: groups of sizes 9 and 1 with correctness 1.0 and 0.0 give 0.9.
    """
    if len(deltas) != len(groups):
        raise ValueError("one delta per group is required")
    valid = sum(int(group_validity(d, g, m, y_cf).sum()) for d, g in zip(deltas, groups))
    total = sum(len(g) for g in groups)
    return valid / total if total else 0.0


def cost_metric(delta: Delta, space: FeatureSpace) -> float:
    """Share of features the delta changes, in [0, 1]."""
    return sparsity_cost(delta) / space.dimension
