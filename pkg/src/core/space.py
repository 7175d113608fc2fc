"""
Feature schemas and instances.
Defines the mixed numeric/categorical domain every stage of the pipeline works in.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import Field, field_validator, model_validator

from src.utils.exceptions import SchemaMismatchError
from src.utils.models import FrozenModel

Value = Union[float, str]
Label = Union[int, str]

# Relative slack used when comparing values against feature bounds
BOUND_TOLERANCE = 1e-9


class FeatureKind(str, Enum):
    """Enum for feature kinds."""
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


class FeatureDescriptor(FrozenModel):
    """A single feature of the domain."""

    name: str = Field(..., min_length=1, description="Feature identifier")
    kind: FeatureKind = Field(..., description="Numeric or categorical")
    bounds: Optional[Tuple[float, float]] = Field(
        default=None, description="(alpha, beta): minimum and maximum feasible value"
    )
    categories: Optional[Tuple[str, ...]] = Field(default=None, description="Ordered category labels")
    actionable: bool = Field(default=True, description="Whether a counterfactual may change this feature")

    @model_validator(mode="after")
    def check_kind_payload(self) -> "FeatureDescriptor":
        """Exactly one of bounds/categories is populated, matching the kind."""
        if self.kind == FeatureKind.NUMERIC:
            if self.bounds is None or self.categories is not None:
                raise ValueError(f"numeric feature '{self.name}' needs bounds and no categories")
            alpha, beta = self.bounds
            if not (np.isfinite(alpha) and np.isfinite(beta)) or alpha > beta:
                raise ValueError(f"feature '{self.name}': bounds must be finite with alpha <= beta")
        else:
            if self.categories is None or self.bounds is not None:
                raise ValueError(f"categorical feature '{self.name}' needs categories and no bounds")
            if len(self.categories) < 2:
                raise ValueError(f"feature '{self.name}': at least two categories required")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"feature '{self.name}': duplicate categories")
        return self

    @property
    def is_numeric(self) -> bool:
        return self.kind == FeatureKind.NUMERIC

    def in_bounds(self, value: float) -> bool:
        """Whether a numeric value lies in [alpha, beta] up to rounding slack."""
        slack = BOUND_TOLERANCE * max(1.0, abs(self.alpha), abs(self.beta))
        return self.alpha - slack <= value <= self.beta + slack

    @property
    def alpha(self) -> float:
        """Minimum feasible value (numeric features only)."""
        return self.bounds[0]

    @property
    def beta(self) -> float:
        """Maximum feasible value (numeric features only)."""
        return self.bounds[1]

    def category_index(self, label: str) -> int:
        """Position of a category label."""
        try:
            return self.categories.index(label)
        except ValueError:
            raise SchemaMismatchError(f"'{label}' is not a category of feature '{self.name}'")

    @classmethod
    def numeric(cls, name: str, alpha: float, beta: float, actionable: bool = True) -> "FeatureDescriptor":
        return cls(name=name, kind=FeatureKind.NUMERIC, bounds=(alpha, beta), actionable=actionable)

    @classmethod
    def categorical(cls, name: str, categories: Sequence[str], actionable: bool = True) -> "FeatureDescriptor":
        return cls(
            name=name, kind=FeatureKind.CATEGORICAL, categories=tuple(categories), actionable=actionable
        )


class Instance(FrozenModel):
    """One point of the domain: a real per numeric feature, a label per categorical feature."""

    values: Tuple[Value, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> Value:
        return self.values[index]


@dataclass(frozen=True)
class CodedSpace:
    """
    Array view of a FeatureSpace.

    Instances are coded as float rows: numeric features carry their value,
    categorical features the index of their category.
    """

    numeric: np.ndarray
    actionable: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_categories: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.numeric.shape[0])

    def out_of_bounds(self, codes: np.ndarray) -> np.ndarray:
        """Boolean mask (same leading shape) of rows with a numeric value outside its bounds."""
        slack = BOUND_TOLERANCE * np.maximum(1.0, np.maximum(np.abs(self.lower), np.abs(self.upper)))
        low = np.where(self.numeric, self.lower - slack, -np.inf)
        high = np.where(self.numeric, self.upper + slack, np.inf)
        return np.any((codes < low) | (codes > high), axis=-1)

    def snap(self, codes: np.ndarray) -> np.ndarray:
        """Pull values lying within tolerance of a bound onto the bound."""
        low = np.where(self.numeric, self.lower, -np.inf)
        high = np.where(self.numeric, self.upper, np.inf)
        return np.clip(codes, low, high)


class FeatureSpace(FrozenModel):
    """Ordered feature schema plus the prediction codomain."""

    features: Tuple[FeatureDescriptor, ...] = Field(..., min_length=1)
    label_set: Tuple[Label, ...] = Field(..., min_length=1, description="Prediction labels, negative first")

    @field_validator("features")
    @classmethod
    def unique_names(cls, features: Tuple[FeatureDescriptor, ...]) -> Tuple[FeatureDescriptor, ...]:
        names = [feature.name for feature in features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        return features

    @field_validator("label_set")
    @classmethod
    def unique_labels(cls, labels: Tuple[Label, ...]) -> Tuple[Label, ...]:
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        return labels

    def __len__(self) -> int:
        return len(self.features)

    @property
    def dimension(self) -> int:
        return len(self.features)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(feature.name for feature in self.features)

    @property
    def is_binary(self) -> bool:
        return len(self.label_set) == 2

    @property
    def all_numeric_actionable(self) -> bool:
        return all(f.is_numeric and f.actionable for f in self.features)

    def label_index(self, label: Label) -> int:
        """Position of a label in the label set (string forms of labels also match)."""
        for index, candidate in enumerate(self.label_set):
            if candidate == label or str(candidate) == str(label):
                return index
        raise SchemaMismatchError(f"'{label}' is not in the label set {list(self.label_set)}")

    def coded(self) -> CodedSpace:
        """Build the array view used by the vectorised paths."""
        numeric = np.array([f.is_numeric for f in self.features], dtype=bool)
        return CodedSpace(
            numeric=numeric,
            actionable=np.array([f.actionable for f in self.features], dtype=bool),
            lower=np.array([f.alpha if f.is_numeric else 0.0 for f in self.features], dtype=float),
            upper=np.array([f.beta if f.is_numeric else 0.0 for f in self.features], dtype=float),
            n_categories=np.array(
                [0 if f.is_numeric else len(f.categories) for f in self.features], dtype=int
            ),
        )

    def validate_instance(self, x: Instance) -> Instance:
        """
        Check an instance against the schema.

        Raises:
            SchemaMismatchError: On arity, type, bound or category violations
        """
        if len(x.values) != self.dimension:
            raise SchemaMismatchError(
                f"instance has {len(x.values)} values, feature space has {self.dimension}"
            )
        for feature, value in zip(self.features, x.values):
            if feature.is_numeric:
                if isinstance(value, str):
                    raise SchemaMismatchError(f"feature '{feature.name}' expects a number, got '{value}'")
                if not feature.in_bounds(float(value)):
                    raise SchemaMismatchError(
                        f"feature '{feature.name}' value {value} outside [{feature.alpha}, {feature.beta}]"
                    )
            else:
                if str(value) not in feature.categories:
                    raise SchemaMismatchError(f"'{value}' is not a category of feature '{feature.name}'")
        return x

    def to_codes(self, instances: Sequence[Instance]) -> np.ndarray:
        """Code instances as an (n, d) float matrix."""
        codes = np.empty((len(instances), self.dimension), dtype=float)
        for row, x in enumerate(instances):
            self.validate_instance(x)
            for col, (feature, value) in enumerate(zip(self.features, x.values)):
                codes[row, col] = float(value) if feature.is_numeric else feature.category_index(str(value))
        return codes

    def from_codes(self, row: np.ndarray) -> Instance:
        """Decode one coded row into an Instance."""
        values = []
        for feature, code in zip(self.features, row):
            if feature.is_numeric:
                values.append(float(code))
            else:
                values.append(feature.categories[int(code)])
        return Instance(values=tuple(values))
