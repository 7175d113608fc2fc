"""
Shared fixtures for the test suite.
"""
import numpy as np
import pytest

from src.classifiers.linear import LogisticModel
from src.core.space import FeatureDescriptor, FeatureSpace, Instance
from src.harness.synthetic import SyntheticLayout, SyntheticMode, make_synthetic


@pytest.fixture
def plane_space():
    """Two numeric features in [-10, 10], labels (0, 1)."""
    return FeatureSpace(
        features=(FeatureDescriptor.numeric("x0", -10.0, 10.0), FeatureDescriptor.numeric("x1", -10.0, 10.0)),
        label_set=(0, 1),
    )


@pytest.fixture
def mixed_space():
    """A numeric feature in [0, 10] and a colour."""
    return FeatureSpace(
        features=(
            FeatureDescriptor.numeric("amount", 0.0, 10.0),
            FeatureDescriptor.categorical("colour", ["red", "green", "blue"]),
        ),
        label_set=("reject", "accept"),
    )


@pytest.fixture
def axis_model(plane_space):
    """Linear model with w = (1, 0), b = 0: positive iff x0 > 0."""
    return LogisticModel(plane_space, [1.0, 0.0], 0.0)


@pytest.fixture
def negatives():
    """Instances predicted 0 by axis_model."""
    return [Instance(values=(-1.0 - i, float(i % 3))) for i in range(6)]


@pytest.fixture
def blobs():
    return make_synthetic(SyntheticLayout(mode=SyntheticMode.BLOBS), 200, seed=3)


@pytest.fixture
def xor():
    return make_synthetic(SyntheticLayout(mode=SyntheticMode.XOR), 200, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
