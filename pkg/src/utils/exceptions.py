"""
Exception hierarchy for the multi-instance counterfactual toolkit.
"""
from typing import Optional


class MultiCfError(Exception):
    """Base class for all library errors."""


class SchemaMismatchError(MultiCfError, ValueError):
    """A value, instance or delta does not conform to its feature space."""


class InfeasibleApplicationError(MultiCfError, ValueError):
    """Applying a delta moved a feature outside its feasible bounds."""

    def __init__(self, feature: str, value: float, alpha: float, beta: float):
        self.feature = feature
        self.value = value
        self.alpha = alpha
        self.beta = beta
        super().__init__(
            f"Feature '{feature}' would take value {value} outside [{alpha}, {beta}]"
        )


class DegenerateTrainingError(MultiCfError, ValueError):
    """Training data cannot produce a classifier (e.g. a single class)."""


class UnsupportedModelError(MultiCfError, ValueError):
    """The requested operation is not available for this model or feature space."""


class NoCounterfactualError(MultiCfError):
    """No counterfactual exists for the request (e.g. zero weight vector)."""


class UndefinedDirectionError(MultiCfError, ValueError):
    """A delta with zero encoded norm has no direction."""


class InsufficientDataError(MultiCfError, ValueError):
    """Too few items for the requested clustering."""


class PreconditionError(MultiCfError, ValueError):
    """An operation was called with inputs violating its precondition."""


class EmptyGroupError(MultiCfError, ValueError):
    """An operation that needs at least one instance received none."""


class DocumentFormatError(MultiCfError, ValueError):
    """A stored document has an unknown kind or an unsupported format version."""


class DatasetError(MultiCfError, ValueError):
    """A dataset file does not match its schema."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
