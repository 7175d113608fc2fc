"""
Model persistence as versioned JSON documents.

Layout (format_version 1):
    {"format_version": 1, "kind": "linear" | "trees", "space": {...},
     "encoding": {...}, "parameters": {...}}
"""
from pathlib import Path
from typing import Annotated, Literal, Tuple, Union

from pydantic import Field

from src.classifiers.base import Classifier, ModelKind
from src.classifiers.boosting import RegressionTree, TreeEnsembleModel, TreeParameters
from src.classifiers.encoding import Encoding
from src.classifiers.linear import LogisticModel
from src.core.space import FeatureSpace
from src.utils.exceptions import DocumentFormatError, UnsupportedModelError
from src.utils.logging import get_logger
from src.utils.models import FrozenModel, VersionedDocument, read_document, write_document

logger = get_logger(__name__)


class LinearParameters(FrozenModel):
    kind: Literal["linear"] = "linear"
    weights: Tuple[float, ...]
    bias: float


class TreeEnsembleParameters(FrozenModel):
    kind: Literal["trees"] = "trees"
    base_score: float
    learning_rate: float
    trees: Tuple[TreeParameters, ...]


class ModelDocument(VersionedDocument):
    """On-disk form of a trained classifier."""

    kind: ModelKind
    space: FeatureSpace
    encoding: Encoding
    parameters: Annotated[Union[LinearParameters, TreeEnsembleParameters], Field(discriminator="kind")]


def model_to_document(model: Classifier) -> ModelDocument:
    """Describe a classifier as a document."""
    if isinstance(model, LogisticModel):
        view = model.linear_view
        parameters = LinearParameters(weights=view.weights, bias=view.bias)
    elif isinstance(model, TreeEnsembleModel):
        parameters = TreeEnsembleParameters(
            base_score=model.base_score,
            learning_rate=model.learning_rate,
            trees=tuple(tree.params for tree in model.trees),
        )
    else:
        raise UnsupportedModelError(f"cannot store model of type {type(model).__name__}")
    return ModelDocument(kind=model.kind, space=model.space, encoding=model.encoding, parameters=parameters)


def model_from_document(document: ModelDocument) -> Classifier:
    """Rebuild a classifier from its document."""
    document.encoding.check_space(document.space)
    parameters = document.parameters
    if document.kind.value != parameters.kind:
        raise DocumentFormatError(f"model kind '{document.kind.value}' does not match parameters '{parameters.kind}'")
    if isinstance(parameters, LinearParameters):
        return LogisticModel(document.space, parameters.weights, parameters.bias)
    return TreeEnsembleModel(
        document.space,
        parameters.base_score,
        parameters.learning_rate,
        [RegressionTree(tree) for tree in parameters.trees],
    )


def save_model(model: Classifier, path: Union[str, Path]) -> Path:
    """
    Save a classifier.

    Args:
        model: The classifier
        path: Destination JSON file

    Returns:
        The written path
    """
    written = write_document(path, model_to_document(model))
    logger.info("Saved model", path=str(written), kind=model.kind.value)
    return written


def load_model(path: Union[str, Path]) -> Classifier:
    """Load a classifier saved with save_model."""
    return model_from_document(read_document(path, ModelDocument))

