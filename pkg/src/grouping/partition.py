"""
Groupings: a partition of instance indices into groups plus a noise set.
"""
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, model_validator

from src.utils.models import VersionedDocument

NOISE = -1


class Grouping(VersionedDocument):
    """Groups G_1..G_N and noise over the index set {0, ..., size - 1}."""

    size: int = Field(..., ge=0, description="Number of partitioned instances")
    groups: Tuple[Tuple[int, ...], ...]
    noise: Tuple[int, ...] = ()
    provenance: Dict[str, Any] = Field(default_factory=dict, description="Strategy and parameters")

    @model_validator(mode="after")
    def check_partition(self) -> "Grouping":
        """Groups are non-empty and disjoint, and with the noise they cover every index once."""
        seen: List[int] = []
        for group in self.groups:
            if len(group) == 0:
                raise ValueError("groups must be non-empty")
            seen.extend(group)
        seen.extend(self.noise)
        if sorted(seen) != list(range(self.size)):
            raise ValueError("groups and noise must partition the index set exactly")
        return self

    @classmethod
    def build(cls, size: int, groups: Iterable[Iterable[int]], noise: Iterable[int] = (),
              provenance: Optional[Dict[str, Any]] = None) -> "Grouping":
        """Canonical grouping: members sorted, groups ordered by their smallest member."""
        members = [tuple(sorted(int(i) for i in group)) for group in groups]
        canonical = sorted((group for group in members if group), key=lambda group: group[0])
        return cls(
            size=size,
            groups=tuple(canonical),
            noise=tuple(sorted(int(i) for i in noise)),
            provenance=provenance or {},
        )

    @classmethod
    def from_labels(cls, labels: Sequence[int], provenance: Optional[Dict[str, Any]] = None) -> "Grouping":
        """Grouping from per-point cluster labels (NOISE for noise)."""
        labels = np.asarray(labels, dtype=int)
        groups = [np.nonzero(labels == c)[0] for c in np.unique(labels[labels != NOISE])]
        return cls.build(labels.shape[0], groups, np.nonzero(labels == NOISE)[0], provenance)

    @classmethod
    def single(cls, size: int, provenance: Optional[Dict[str, Any]] = None) -> "Grouping":
        """One group holding everything (no grouping)."""
        return cls.build(size, [range(size)] if size else [], (), provenance)

    def labels(self) -> np.ndarray:
        """Per-index group number, NOISE for noise."""
        labels = np.full(self.size, NOISE, dtype=int)
        for number, group in enumerate(self.groups):
            labels[list(group)] = number
        return labels

