"""
Dataset schemas and CSV ingestion.

A schema names every CSV column, its role (feature, label or ignore), and
for features the kind, bounds or categories and the actionability flag.
Bounds are taken from the schema; values outside them are rejected.
"""
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import Field, model_validator

from src.classifiers.base import LabeledData
from src.core.space import FeatureDescriptor, FeatureKind, FeatureSpace, Instance
from src.utils.exceptions import DatasetError
from src.utils.logging import get_logger
from src.utils.models import FrozenModel, VersionedDocument, read_document

logger = get_logger(__name__)


class ColumnRole(str, Enum):
    """Enum for CSV column roles."""
    FEATURE = "feature"
    LABEL = "label"
    IGNORE = "ignore"


class ColumnSpec(FrozenModel):
    """One CSV column."""

    name: str = Field(..., min_length=1)
    role: ColumnRole = ColumnRole.FEATURE
    kind: Optional[FeatureKind] = None
    bounds: Optional[Tuple[float, float]] = None
    categories: Optional[Tuple[str, ...]] = None
    actionable: bool = True

    @model_validator(mode="after")
    def check_feature(self) -> "ColumnSpec":
        if self.role == ColumnRole.FEATURE:
            if self.kind is None:
                raise ValueError(f"feature column '{self.name}' needs a kind")
            self.descriptor()
        return self

    def descriptor(self) -> FeatureDescriptor:
        return FeatureDescriptor(
            name=self.name, kind=self.kind, bounds=self.bounds, categories=self.categories, actionable=self.actionable
        )


class DatasetSchema(VersionedDocument):
    """Column layout of a CSV dataset."""

    name: str = ""
    columns: Tuple[ColumnSpec, ...] = Field(..., min_length=2)
    labels: Tuple[str, ...] = Field(..., min_length=2, description="Label values, negative class first")

    @model_validator(mode="after")
    def check_columns(self) -> "DatasetSchema":
        names = [column.name for column in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        if sum(column.role == ColumnRole.LABEL for column in self.columns) != 1:
            raise ValueError("exactly one label column is required")
        if not self.features:
            raise ValueError("at least one feature column is required")
        return self

    @property
    def features(self) -> List[ColumnSpec]:
        return [column for column in self.columns if column.role == ColumnRole.FEATURE]

    @property
    def label_column(self) -> str:
        return next(column.name for column in self.columns if column.role == ColumnRole.LABEL)

    def feature_space(self) -> FeatureSpace:
        return FeatureSpace(features=tuple(column.descriptor() for column in self.features), label_set=self.labels)


def load_schema(path: Union[str, Path]) -> DatasetSchema:
    return read_document(path, DatasetSchema)


def schema_for_space(space: FeatureSpace, label_name: str = "label", name: str = "") -> DatasetSchema:
    """Schema describing a feature space plus a label column."""
    columns = [
        ColumnSpec(name=f.name, kind=f.kind, bounds=f.bounds, categories=f.categories, actionable=f.actionable)
        for f in space.features
    ]
    columns.append(ColumnSpec(name=label_name, role=ColumnRole.LABEL))
    return DatasetSchema(name=name, columns=tuple(columns), labels=tuple(str(label) for label in space.label_set))


def _to_float(text: str) -> float:
    """Exact decimal-to-float conversion; pandas' fast parser can be off by one ulp."""
    try:
        return float(text)
    except ValueError:
        return float("nan")


def _parse_numeric(frame: pd.DataFrame, column: ColumnSpec) -> np.ndarray:
    raw = frame[column.name].str.strip()
    values = np.array([_to_float(text) for text in raw], dtype=float)
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        row = int(bad[0])
        raise DatasetError(f"cannot parse '{raw.iloc[row]}' as a number", row=row + 1, column=column.name)
    feature = column.descriptor()
    outside = [i for i, v in enumerate(values) if not feature.in_bounds(v)]
    if outside:
        row = outside[0]
        raise DatasetError(
            f"value {values[row]} outside [{feature.alpha}, {feature.beta}]", row=row + 1, column=column.name
        )
    return values


def _parse_categorical(frame: pd.DataFrame, column: ColumnSpec, allowed: Tuple[str, ...]) -> List[str]:
    values = frame[column.name].str.strip().tolist()
    for row, value in enumerate(values):
        if value not in allowed:
            raise DatasetError(f"'{value}' is not one of {list(allowed)}", row=row + 1, column=column.name)
    return values


def _read_frame(path: Union[str, Path], required: List[str]) -> pd.DataFrame:
    """Read a CSV file as strings and check that the required columns are present."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}")
    missing = [name for name in required if name not in frame.columns]
    if missing:
        raise DatasetError(f"missing column(s) {missing}", column=missing[0])
    return frame


def _parse_instances(frame: pd.DataFrame, specs: List[ColumnSpec]) -> List[Instance]:
    columns = []
    for column in specs:
        if column.kind == FeatureKind.NUMERIC:
            columns.append([float(v) for v in _parse_numeric(frame, column)])
        else:
            columns.append(_parse_categorical(frame, column, column.categories))
    return [Instance(values=tuple(row)) for row in zip(*columns)]


def load_dataset(path: Union[str, Path], schema: DatasetSchema) -> Tuple[FeatureSpace, LabeledData]:
    """
    Read a CSV file and validate it against a schema.

    Rows are numbered from 1 (the first data row after the header).

    Args:
        path: CSV file with a header row
        schema: Column layout

    Returns:
        The feature space and the labeled instances

    Raises:
        DatasetError: On missing columns, unparseable values, out-of-bounds
            values, unknown categories or labels
    """
    frame = _read_frame(path, [column.name for column in schema.columns])
    space = schema.feature_space()
    instances = tuple(_parse_instances(frame, schema.features))
    label_spec = next(column for column in schema.columns if column.role == ColumnRole.LABEL)
    labels = _parse_categorical(frame, label_spec, schema.labels)

    data = LabeledData(instances=instances, labels=tuple(labels))
    logger.info("Loaded dataset", path=str(path), rows=len(instances), features=space.dimension)
    return space, data


def load_instances(path: Union[str, Path], space: FeatureSpace) -> List[Instance]:
    """
    Read unlabeled instances whose header names the features of a space.

    Columns that are not features (for example a label column) are ignored.

    Raises:
        DatasetError: As load_dataset
    """
    specs = schema_for_space(space).features
    frame = _read_frame(path, [column.name for column in specs])
    return _parse_instances(frame, specs)


def write_dataset(path: Union[str, Path], space: FeatureSpace, data: LabeledData, label_name: str = "label") -> Path:
    """Write labeled instances as CSV in the layout load_dataset reads."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([list(x.values) for x in data.instances], columns=list(space.names))
    frame[label_name] = [str(label) for label in data.labels]
    frame.to_csv(target, index=False)
    logger.debug("Wrote dataset", path=str(target), rows=len(frame))
    return target
