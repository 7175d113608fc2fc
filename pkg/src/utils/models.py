"""
Shared pydantic bases for records and on-disk documents.
Every file the toolkit writes is a versioned JSON document defined on top of these bases.
"""
from pathlib import Path
from typing import Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.utils.exceptions import DocumentFormatError
from src.utils.logging import get_logger

logger = get_logger(__name__)

# Version of every JSON document layout written by this package
FORMAT_VERSION = 1

DocumentT = TypeVar("DocumentT", bound="VersionedDocument")


class FrozenModel(BaseModel):
    """Immutable record that rejects unknown fields."""

    model_config = ConfigDict(frozen=True, extra="forbid")


class ConfigModel(BaseModel):
    """Immutable configuration record that also accepts field aliases."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


class VersionedDocument(FrozenModel):
    """Top-level document carrying a format version."""

    format_version: int = Field(default=FORMAT_VERSION, description="Document layout version")

    def to_json(self) -> str:
        """Serialize deterministically."""
        return self.model_dump_json(indent=2, by_alias=True) + "\n"


def write_document(path: Union[str, Path], document: VersionedDocument) -> Path:
    """
    Write a document to disk, creating parent directories.

    Args:
        path: Destination file
        document: The document to write

    Returns:
        The written path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(document.to_json(), encoding="utf-8")
    logger.debug("Wrote document", path=str(target), kind=type(document).__name__)
    return target


def read_document(path: Union[str, Path], cls: Type[DocumentT]) -> DocumentT:
    """
    Read and validate a document.

    Args:
        path: Source file
        cls: The expected document class

    Returns:
        The validated document

    Raises:
        DocumentFormatError: If the format version is unsupported
        pydantic.ValidationError: If the content does not match the document class
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        document = cls.model_validate_json(text)
    except ValidationError:
        logger.error("Invalid document", path=str(path), kind=cls.__name__)
        raise
    if document.format_version != FORMAT_VERSION:
        raise DocumentFormatError(
            f"{path}: format_version {document.format_version} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    return document
