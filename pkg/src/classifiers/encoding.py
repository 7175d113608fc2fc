"""
Numeric encoding of mixed instances: numeric features pass through, categorical features are one-hot.
"""
from typing import Tuple

import numpy as np
from pydantic import Field

from src.core.space import FeatureSpace
from src.utils.exceptions import SchemaMismatchError
from src.utils.models import FrozenModel


class EncodedBlock(FrozenModel):
    """Columns occupied by one feature in the encoded vector."""

    feature: str
    start: int = Field(..., ge=0)
    width: int = Field(..., ge=1)
    categorical: bool = False


class Encoding(FrozenModel):
    """Mapping from coded instances to real vectors."""

    blocks: Tuple[EncodedBlock, ...]

    @classmethod
    def for_space(cls, space: FeatureSpace) -> "Encoding":
        blocks = []
        start = 0
        for feature in space.features:
            width = 1 if feature.is_numeric else len(feature.categories)
            blocks.append(
                EncodedBlock(feature=feature.name, start=start, width=width, categorical=not feature.is_numeric)
            )
            start += width
        return cls(blocks=tuple(blocks))

    @property
    def dimension(self) -> int:
        last = self.blocks[-1]
        return last.start + last.width

    def check_space(self, space: FeatureSpace) -> None:
        """Raise if the encoding was not built for this feature space."""
        if Encoding.for_space(space) != self:
            raise SchemaMismatchError("encoding does not match the feature space")

    def transform(self, codes: np.ndarray) -> np.ndarray:
        """
        Encode coded instances.

        Args:
            codes: (..., d) coded instances

        Returns:
            (..., D) encoded vectors
        """
        codes = np.asarray(codes, dtype=float)
        encoded = np.zeros(codes.shape[:-1] + (self.dimension,), dtype=float)
        for column, block in enumerate(self.blocks):
            if block.categorical:
                index = codes[..., column].astype(int)
                one_hot = np.eye(block.width)[index]
                encoded[..., block.start:block.start + block.width] = one_hot
            else:
                encoded[..., block.start] = codes[..., column]
        return encoded

    def direction(self, genomes: np.ndarray) -> np.ndarray:
        """
        Encode genomes as direction vectors: numeric offsets pass through, an
        assigned category becomes the unit axis of that category, no change is zero.
        """
        genomes = np.atleast_2d(np.asarray(genomes, dtype=float))
        vectors = np.zeros((genomes.shape[0], self.dimension), dtype=float)
        for column, block in enumerate(self.blocks):
            genes = genomes[:, column]
            if block.categorical:
                changed = genes >= 0
                rows = np.nonzero(changed)[0]
                vectors[rows, block.start + genes[changed].astype(int)] = 1.0
            else:
                vectors[:, block.start] = genes
        return vectors
