"""
Counterfactual changes (deltas), their application to instances and their cost.

A delta is stored as one change per feature. The evolutionary search and the
metrics work on the genome form of a delta: a float row with the numeric
offset for numeric features and the target category index (or -1 for no
change) for categorical features.
"""
from enum import Enum
from typing import Annotated, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import Field, field_validator

from src.core.space import CodedSpace, FeatureSpace, Instance
from src.utils.exceptions import InfeasibleApplicationError, SchemaMismatchError
from src.utils.models import FrozenModel

# Genome code of an unchanged categorical feature
KEEP_CATEGORY = -1.0


class CostKind(str, Enum):
    """Enum for the cost functions a search can minimise."""
    PSI = "psi"
    SPARSITY = "sparsity"
    L2 = "l2"


class NoChange(FrozenModel):
    op: Literal["none"] = "none"


class NumericOffset(FrozenModel):
    op: Literal["offset"] = "offset"
    value: float


class CategoricalSet(FrozenModel):
    op: Literal["set"] = "set"
    label: str


Change = Annotated[Union[NoChange, NumericOffset, CategoricalSet], Field(discriminator="op")]


class Delta(FrozenModel):
    """A counterfactual change: one entry per feature."""

    changes: Tuple[Change, ...]

    @field_validator("changes")
    @classmethod
    def zero_offset_is_no_change(cls, changes: Tuple[Change, ...]) -> Tuple[Change, ...]:
        # A zero offset and NoChange are the same change
        return tuple(
            NoChange() if isinstance(c, NumericOffset) and c.value == 0.0 else c for c in changes
        )

    def __len__(self) -> int:
        return len(self.changes)

    @property
    def is_zero(self) -> bool:
        return all(isinstance(c, NoChange) for c in self.changes)

    @classmethod
    def zero(cls, dimension: int) -> "Delta":
        """The all-NoChange delta."""
        return cls(changes=tuple(NoChange() for _ in range(dimension)))

    @classmethod
    def of(cls, *changes: Union[None, float, str]) -> "Delta":
        """Shorthand: None -> NoChange, number -> NumericOffset, str -> CategoricalSet."""
        built: List[Change] = []
        for change in changes:
            if change is None:
                built.append(NoChange())
            elif isinstance(change, str):
                built.append(CategoricalSet(label=change))
            else:
                built.append(NumericOffset(value=float(change)))
        return cls(changes=tuple(built))


def validate_delta(space: FeatureSpace, d: Delta) -> Delta:
    """
    Check a delta against a feature space.

    Raises:
        SchemaMismatchError: On arity, kind, category or actionability violations
    """
    if len(d.changes) != space.dimension:
        raise SchemaMismatchError(f"delta has {len(d.changes)} entries, feature space has {space.dimension}")
    for feature, change in zip(space.features, d.changes):
        if isinstance(change, NoChange):
            continue
        if not feature.actionable:
            raise SchemaMismatchError(f"feature '{feature.name}' is not actionable")
        if isinstance(change, NumericOffset):
            if not feature.is_numeric:
                raise SchemaMismatchError(f"numeric offset on categorical feature '{feature.name}'")
            if not np.isfinite(change.value):
                raise SchemaMismatchError(f"offset on feature '{feature.name}' is not finite")
        else:
            if feature.is_numeric:
                raise SchemaMismatchError(f"category assignment on numeric feature '{feature.name}'")
            feature.category_index(change.label)
    return d


def apply_delta(space: FeatureSpace, x: Instance, d: Delta) -> Instance:
    """
    Apply a delta to an instance (the x ⊕ δ operator).

    Numeric features add the offset, categorical features take the assigned
    label, NoChange copies the value. Results are never clipped.

    Args:
        space: The feature space both arguments conform to
        x: The original instance
        d: The change to apply

    Returns:
        The changed instance

    Raises:
        InfeasibleApplicationError: If a numeric result leaves its [alpha, beta] range
    """
    space.validate_instance(x)
    validate_delta(space, d)
    values = []
    for feature, value, change in zip(space.features, x.values, d.changes):
        if isinstance(change, NoChange):
            values.append(value)
        elif isinstance(change, NumericOffset):
            moved = float(value) + change.value
            if not feature.in_bounds(moved):
                raise InfeasibleApplicationError(feature.name, moved, feature.alpha, feature.beta)
            values.append(float(min(max(moved, feature.alpha), feature.beta)))
        else:
            values.append(change.label)
    return Instance(values=tuple(values))


def delta_cost(d: Delta, weights: Optional[Sequence[float]] = None) -> float:
    """
    Weighted ψ cost: |offset| per numeric change, 1 per categorical change, 0 for no change.

    Args:
        d: The delta
        weights: Positive per-feature weights, all ones by default

    Returns:
        The non-negative cost
    """
    weights = _check_weights(weights, len(d.changes))
    total = 0.0
    for weight, change in zip(weights, d.changes):
        if isinstance(change, NumericOffset):
            total += weight * abs(change.value)
        elif isinstance(change, CategoricalSet):
            total += weight
    return float(total)


def sparsity_cost(d: Delta) -> float:
    """Number of changed features."""
    return float(sum(0 if isinstance(change, NoChange) else 1 for change in d.changes))


def l2_cost(d: Delta) -> float:
    """Euclidean norm of the numeric offsets, with one unit per categorical change."""
    total = 0.0
    for change in d.changes:
        if isinstance(change, NumericOffset):
            total += change.value ** 2
        elif isinstance(change, CategoricalSet):
            total += 1.0
    return float(np.sqrt(total))


def cost_of(d: Delta, kind: CostKind = CostKind.PSI, weights: Optional[Sequence[float]] = None) -> float:
    """Cost of a delta under the selected cost kind."""
    if kind == CostKind.PSI:
        return delta_cost(d, weights)
    if kind == CostKind.SPARSITY:
        return sparsity_cost(d)
    return l2_cost(d)


def _check_weights(weights: Optional[Sequence[float]], dimension: int) -> np.ndarray:
    if weights is None:
        return np.ones(dimension)
    array = np.asarray(weights, dtype=float)
    if array.shape != (dimension,):
        raise SchemaMismatchError(f"expected {dimension} weights, got {array.shape[0] if array.ndim else 0}")
    if np.any(array <= 0):
        raise SchemaMismatchError("weights must be strictly positive")
    return array


def delta_to_genome(space: FeatureSpace, d: Delta) -> np.ndarray:
    """Convert a delta into its genome row."""
    validate_delta(space, d)
    genome = np.zeros(space.dimension, dtype=float)
    for index, (feature, change) in enumerate(zip(space.features, d.changes)):
        if isinstance(change, NumericOffset):
            genome[index] = change.value
        elif isinstance(change, CategoricalSet):
            genome[index] = feature.category_index(change.label)
        elif not feature.is_numeric:
            genome[index] = KEEP_CATEGORY
    return genome


def genome_to_delta(space: FeatureSpace, genome: np.ndarray) -> Delta:
    """Convert a genome row back into a delta."""
    changes: List[Change] = []
    for feature, gene in zip(space.features, genome):
        if feature.is_numeric:
            changes.append(NoChange() if gene == 0.0 else NumericOffset(value=float(gene)))
        elif gene < 0:
            changes.append(NoChange())
        else:
            changes.append(CategoricalSet(label=feature.categories[int(gene)]))
    return Delta(changes=tuple(changes))


def changed_mask(coded: CodedSpace, genomes: np.ndarray) -> np.ndarray:
    """Boolean mask of changed genes for a (k, d) genome matrix."""
    return np.where(coded.numeric, genomes != 0.0, genomes >= 0.0)


def genome_costs(
    coded: CodedSpace,
    genomes: np.ndarray,
    kind: CostKind = CostKind.PSI,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Vectorised cost of a (k, d) genome matrix; agrees with cost_of on each row.
    """
    genomes = np.atleast_2d(genomes)
    changed = changed_mask(coded, genomes)
    if kind == CostKind.SPARSITY:
        return changed.sum(axis=1).astype(float)
    magnitude = np.where(coded.numeric, np.abs(genomes), changed.astype(float))
    if kind == CostKind.L2:
        return np.sqrt((magnitude ** 2).sum(axis=1))
    if weights is not None:
        magnitude = magnitude * weights
    return magnitude.sum(axis=1)


def apply_genomes(coded: CodedSpace, codes: np.ndarray, genomes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Apply every genome to every coded instance.

    Args:
        coded: Array view of the feature space
        codes: (n, d) coded instances
        genomes: (k, d) genome matrix

    Returns:
        A (k, n, d) array of changed instances (snapped onto bounds within
        tolerance) and a (k, n) boolean mask of feasible applications
    """
    genomes = np.atleast_2d(genomes)
    shifted = codes[None, :, :] + genomes[:, None, :]
    replaced = np.where(genomes[:, None, :] >= 0.0, genomes[:, None, :], codes[None, :, :])
    applied = np.where(coded.numeric, shifted, replaced)
    feasible = ~coded.out_of_bounds(applied)
    return coded.snap(applied), feasible
