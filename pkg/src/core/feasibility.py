"""
Feasible change sets for a group of instances.

For a numeric feature with bounds [alpha, beta] and group values v_j the
feasible offsets are [alpha - min_j v_j, beta - max_j v_j]: any offset in this
interval keeps every member inside the bounds.
"""
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import Field

from src.core.delta import KEEP_CATEGORY, Delta, NumericOffset, CategoricalSet, NoChange
from src.core.space import CodedSpace, FeatureSpace, Instance
from src.utils.exceptions import EmptyGroupError
from src.utils.models import FrozenModel


class FeasibleChangeSet(FrozenModel):
    """Per-feature feasible changes: an offset interval or a set of replacement labels."""

    intervals: Tuple[Optional[Tuple[float, float]], ...] = Field(
        ..., description="(l_i, u_i) for numeric features, None for categorical ones"
    )
    allowed: Tuple[Optional[Tuple[str, ...]], ...] = Field(
        ..., description="Allowed replacement labels for categorical features, None for numeric ones"
    )

    @property
    def lower(self) -> np.ndarray:
        return np.array([iv[0] if iv is not None else 0.0 for iv in self.intervals], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([iv[1] if iv is not None else 0.0 for iv in self.intervals], dtype=float)

    def allowed_indices(self, space: FeatureSpace) -> Tuple[np.ndarray, ...]:
        """Category indices each categorical gene may take (empty for numeric genes)."""
        indices = []
        for feature, labels in zip(space.features, self.allowed):
            if feature.is_numeric or labels is None:
                indices.append(np.empty(0, dtype=int))
            else:
                indices.append(np.array([feature.category_index(label) for label in labels], dtype=int))
        return tuple(indices)

    def contains(self, space: FeatureSpace, d: Delta) -> bool:
        """Whether a delta lies inside this change set."""
        for interval, labels, change in zip(self.intervals, self.allowed, d.changes):
            if isinstance(change, NoChange):
                continue
            if isinstance(change, NumericOffset):
                if interval is None or not (interval[0] <= change.value <= interval[1]):
                    return False
            elif isinstance(change, CategoricalSet):
                if labels is None or change.label not in labels:
                    return False
        return True

    def clip_genomes(self, coded: CodedSpace, genomes: np.ndarray, allowed: Sequence[np.ndarray]) -> np.ndarray:
        """
        Repair genomes into the change set: numeric genes are clipped to
        [l_i, u_i], categorical genes outside the allowed labels become no change.
        """
        repaired = np.where(coded.numeric, np.clip(genomes, self.lower, self.upper), genomes)
        for column, choices in enumerate(allowed):
            if coded.numeric[column]:
                continue
            genes = repaired[..., column]
            keep = (genes < 0) | np.isin(genes.astype(int), choices)
            repaired[..., column] = np.where(keep, genes, KEEP_CATEGORY)
        return repaired


def feasible_change_set(space: FeatureSpace, group: Sequence[Instance]) -> FeasibleChangeSet:
    """
    Compute the feasible change set of a group.

    Numeric features get [alpha - min_j x_j, beta - max_j x_j]; categorical
    features may take any of their categories. Non-actionable features get
    the zero interval or no allowed labels.

    Args:
        space: The feature space
        group: Non-empty group of valid instances

    Returns:
        The feasible change set

    Raises:
        EmptyGroupError: If the group is empty
    """
    if len(group) == 0:
        raise EmptyGroupError("feasible change set of an empty group")
    codes = space.to_codes(group)
    return feasible_change_set_from_codes(space, codes)


def feasible_change_set_from_codes(space: FeatureSpace, codes: np.ndarray) -> FeasibleChangeSet:
    """Same as feasible_change_set, for an already coded (n, d) group."""
    if codes.shape[0] == 0:
        raise EmptyGroupError("feasible change set of an empty group")
    intervals = []
    allowed = []
    for column, feature in enumerate(space.features):
        if feature.is_numeric:
            if feature.actionable:
                low = float(feature.alpha - codes[:, column].min())
                high = float(feature.beta - codes[:, column].max())
                intervals.append((low, high))
            else:
                intervals.append((0.0, 0.0))
            allowed.append(None)
        else:
            intervals.append(None)
            allowed.append(tuple(feature.categories) if feature.actionable else ())
    return FeasibleChangeSet(intervals=tuple(intervals), allowed=tuple(allowed))
