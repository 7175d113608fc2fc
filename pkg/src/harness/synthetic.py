"""
Deterministic synthetic datasets for desk-scale experiments.

Modes:
    blobs    Two Gaussian blobs, negative around -c and positive around +c.
    xor      Uniform points in [-1, 1]^d labelled by the sign pattern of the first two features.
    bundles  A non-actionable categorical "segment" plus one disjoint bundle of
             numeric features per segment. An instance is positive iff the
             features of its own segment's bundle are high. Some negatives
             have another segment's bundle raised, so the segment matters.
"""
from enum import Enum
from typing import List, Tuple

import numpy as np
from pydantic import Field, model_validator

from src.classifiers.base import LabeledData
from src.core.space import FeatureDescriptor, FeatureSpace
from src.utils.logging import get_logger
from src.utils.models import ConfigModel
from src.utils.seeding import make_rng

logger = get_logger(__name__)

LABELS = (0, 1)


class SyntheticMode(str, Enum):
    """Enum for synthetic generators."""
    BLOBS = "blobs"
    XOR = "xor"
    BUNDLES = "bundles"


class SyntheticLayout(ConfigModel):
    """Layout of a synthetic dataset."""

    mode: SyntheticMode = SyntheticMode.BLOBS
    features: int = Field(default=2, ge=2, description="Numeric features (blobs/xor)")
    separation: float = Field(default=8.0, gt=0.0, description="Distance between blob centres (blobs)")
    segments: int = Field(default=4, ge=2, description="Segments and bundles (bundles)")
    bundle_size: int = Field(default=2, ge=1, description="Features per bundle (bundles)")
    low: float = Field(default=3.0, description="Mean of a bundle feature when not raised")
    high: float = Field(default=8.0, description="Mean of a raised bundle feature")
    spread: float = Field(default=0.7, gt=0.0, description="Standard deviation around low/high")
    background: float = Field(default=4.0, gt=0.0, description="Other bundle features are uniform in [0, background]")
    ceiling: float = Field(default=20.0, gt=0.0, description="Upper bound of bundle features")
    cross_rate: float = Field(default=1.0 / 3.0, ge=0.0, le=1.0,
                              description="Share of negatives with a foreign bundle raised")
    extra_categorical: int = Field(default=0, ge=0, description="Irrelevant three-category columns")

    @model_validator(mode="after")
    def check_levels(self) -> "SyntheticLayout":
        if not 0.0 < self.low < self.high < self.ceiling:
            raise ValueError("bundle levels must satisfy 0 < low < high < ceiling")
        return self


def _blobs(layout: SyntheticLayout, n: int, rng: np.random.Generator) -> Tuple[List[FeatureDescriptor], np.ndarray, np.ndarray]:
    d = layout.features
    bound = layout.separation + 10.0
    labels = np.arange(n) % 2
    centre = np.full(d, layout.separation / (2.0 * np.sqrt(d)))
    points = rng.standard_normal((n, d)) + np.where(labels[:, None] == 1, centre, -centre)
    features = [FeatureDescriptor.numeric(f"x{i}", -bound, bound) for i in range(d)]
    return features, np.clip(points, -bound, bound), labels


def _xor(layout: SyntheticLayout, n: int, rng: np.random.Generator) -> Tuple[List[FeatureDescriptor], np.ndarray, np.ndarray]:
    d = layout.features
    points = rng.uniform(-1.0, 1.0, size=(n, d))
    labels = ((points[:, 0] > 0) ^ (points[:, 1] > 0)).astype(int)
    features = [FeatureDescriptor.numeric(f"x{i}", -1.0, 1.0) for i in range(d)]
    return features, points, labels


def _bundles(layout: SyntheticLayout, n: int, rng: np.random.Generator) -> Tuple[List[FeatureDescriptor], np.ndarray, np.ndarray]:
    k, size = layout.segments, layout.bundle_size
    segment = np.arange(n) % k
    labels = (rng.random(n) < 0.5).astype(int)
    cross = (labels == 0) & (rng.random(n) < layout.cross_rate)
    foreign = (segment + rng.integers(1, k, size=n)) % k

    values = rng.uniform(0.0, layout.background, size=(n, k * size))
    own_low = rng.normal(layout.low, layout.spread, size=(n, size))
    own_high = rng.normal(layout.high, layout.spread, size=(n, size))
    raised = rng.normal(layout.high, layout.spread, size=(n, size))
    for row in range(n):
        own = slice(segment[row] * size, (segment[row] + 1) * size)
        values[row, own] = own_high[row] if labels[row] == 1 else own_low[row]
        if cross[row]:
            values[row, foreign[row] * size:(foreign[row] + 1) * size] = raised[row]
    values = np.clip(values, 0.0, layout.ceiling)

    features = [FeatureDescriptor.categorical("segment", [f"s{i}" for i in range(k)], actionable=False)]
    features += [FeatureDescriptor.numeric(f"b{i // size}_{i % size}", 0.0, layout.ceiling) for i in range(k * size)]
    codes = np.column_stack([segment.astype(float), values])
    return features, codes, labels


_GENERATORS = {
    SyntheticMode.BLOBS: _blobs,
    SyntheticMode.XOR: _xor,
    SyntheticMode.BUNDLES: _bundles,
}


def make_synthetic(layout: SyntheticLayout, n: int, seed: int = 0) -> Tuple[FeatureSpace, LabeledData]:
    """
    Generate a labeled dataset.

    Args:
        layout: Generator mode and parameters
        n: Number of instances (at least 2)
        seed: RNG seed; equal seeds give identical data

    Returns:
        The feature space (labels (0, 1), negative first) and the data
    """
    if n < 2:
        raise ValueError(f"at least 2 instances are required, got {n}")
    rng = make_rng(seed)
    features, codes, labels = _GENERATORS[layout.mode](layout, n, rng)
    for extra in range(layout.extra_categorical):
        features.append(FeatureDescriptor.categorical(f"c{extra}", ["a", "b", "c"]))
        codes = np.column_stack([codes, rng.integers(0, 3, size=n).astype(float)])

    space = FeatureSpace(features=tuple(features), label_set=LABELS)
    instances = tuple(space.from_codes(row) for row in codes)
    data = LabeledData(instances=instances, labels=tuple(LABELS[int(label)] for label in labels))
    logger.info("Generated synthetic data", mode=layout.mode.value, n=n, positives=int(labels.sum()))
    return space, data
