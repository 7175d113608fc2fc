"""
Tests for feature spaces, deltas, costs and feasible change sets.
"""
import numpy as np
import pytest
from pydantic import ValidationError

from src.core.delta import (
    CostKind,
    Delta,
    apply_delta,
    apply_genomes,
    cost_of,
    delta_cost,
    delta_to_genome,
    genome_costs,
    genome_to_delta,
    sparsity_cost,
    validate_delta,
)
from src.core.feasibility import feasible_change_set
from src.core.space import FeatureDescriptor, FeatureSpace, Instance
from src.utils.exceptions import EmptyGroupError, InfeasibleApplicationError, SchemaMismatchError


def test_descriptor_requires_matching_payload():
    """Numeric features need bounds, categorical ones need categories."""
    with pytest.raises(ValidationError):
        FeatureDescriptor(name="a", kind="numeric")
    with pytest.raises(ValidationError):
        FeatureDescriptor(name="a", kind="categorical", categories=("x",))
    with pytest.raises(ValidationError):
        FeatureDescriptor.numeric("a", 5.0, 1.0)


def test_space_rejects_duplicate_names():
    """Feature names must be unique."""
    with pytest.raises(ValidationError):
        FeatureSpace(features=(FeatureDescriptor.numeric("a", 0, 1), FeatureDescriptor.numeric("a", 0, 1)),
                     label_set=(0, 1))


def test_validate_instance(mixed_space):
    """Arity, type, bound and category violations are rejected."""
    mixed_space.validate_instance(Instance(values=(1.0, "red")))
    for values in [(1.0,), ("x", "red"), (11.0, "red"), (1.0, "purple")]:
        with pytest.raises(SchemaMismatchError):
            mixed_space.validate_instance(Instance(values=values))


def test_codes_round_trip(mixed_space):
    """Instances survive conversion to codes and back."""
    x = Instance(values=(2.5, "blue"))
    codes = mixed_space.to_codes([x])
    assert codes.tolist() == [[2.5, 2.0]]
    assert mixed_space.from_codes(codes[0]) == x


def test_apply_identity(plane_space):
    """The all-NoChange delta leaves an instance unchanged."""
    x = Instance(values=(1.0, 2.0))
    assert apply_delta(plane_space, x, Delta.of(None, None)) == x


def test_apply_mixed(mixed_space):
    """Offsets and category assignments apply together."""
    changed = apply_delta(mixed_space, Instance(values=(1.0, "red")), Delta.of(0.5, "blue"))
    assert changed == Instance(values=(1.5, "blue"))


def test_apply_outside_bounds_names_feature():
    """Leaving the bounds raises an error naming the feature."""
    space = FeatureSpace(features=(FeatureDescriptor.numeric("income", 0.0, 10.0),), label_set=(0, 1))
    with pytest.raises(InfeasibleApplicationError) as excinfo:
        apply_delta(space, Instance(values=(9.8,)), Delta.of(0.5))
    assert excinfo.value.feature == "income"


def test_apply_within_tolerance_lands_on_bound():
    """A value within rounding slack of a bound is snapped onto it."""
    space = FeatureSpace(features=(FeatureDescriptor.numeric("a", 0.0, 1.0),), label_set=(0, 1))
    changed = apply_delta(space, Instance(values=(0.7,)), Delta.of(0.3 + 1e-12))
    assert changed.values[0] == 1.0


def test_delta_rejects_changes_to_frozen_features():
    """Non-actionable features cannot be changed."""
    space = FeatureSpace(features=(FeatureDescriptor.numeric("age", 18, 99, actionable=False),), label_set=(0, 1))
    with pytest.raises(SchemaMismatchError):
        validate_delta(space, Delta.of(1.0))


def test_zero_offset_is_no_change():
    """A zero offset counts as no change."""
    assert Delta.of(0.0, None).is_zero


def test_delta_cost():
    """ψ adds absolute offsets and one per category change, with optional weights."""
    assert delta_cost(Delta.of(None, None)) == 0.0
    assert delta_cost(Delta.of(0.5, "blue")) == 1.5
    assert delta_cost(Delta.of(-2.0, None), weights=(3.0, 1.0)) == 6.0


def test_delta_cost_rejects_bad_weights():
    """Weights must match the dimension and be positive."""
    with pytest.raises(SchemaMismatchError):
        delta_cost(Delta.of(1.0, None), weights=(1.0, 0.0))
    with pytest.raises(SchemaMismatchError):
        delta_cost(Delta.of(1.0, None), weights=(1.0,))


def test_sparsity_cost():
    """Sparsity counts the changed features."""
    assert sparsity_cost(Delta.zero(5)) == 0
    assert sparsity_cost(Delta.of(1.0, None, "a", None, None)) == 2
    assert sparsity_cost(Delta.of(1.0, 2.0, 3.0)) == 3


def test_genome_costs_agree_with_cost_of(mixed_space, rng):
    """The vectorised costs match the per-delta costs for every kind."""
    genomes = np.column_stack([rng.uniform(-5, 5, 50), rng.integers(-1, 3, 50).astype(float)])
    genomes[::7, 0] = 0.0
    coded = mixed_space.coded()
    for kind in CostKind:
        vectorised = genome_costs(coded, genomes, kind)
        expected = [cost_of(genome_to_delta(mixed_space, g), kind) for g in genomes]
        np.testing.assert_allclose(vectorised, expected)


def test_genome_round_trip(mixed_space):
    """Deltas survive conversion to genomes and back."""
    d = Delta.of(-1.5, "green")
    assert genome_to_delta(mixed_space, delta_to_genome(mixed_space, d)) == d
    assert delta_to_genome(mixed_space, Delta.zero(2)).tolist() == [0.0, -1.0]


def test_apply_genomes_matches_apply_delta(mixed_space):
    """Vectorised application agrees with applying single deltas, feasibility included."""
    xs = [Instance(values=(1.0, "red")), Instance(values=(9.0, "green"))]
    genome = delta_to_genome(mixed_space, Delta.of(2.0, "blue"))
    applied, feasible = apply_genomes(mixed_space.coded(), mixed_space.to_codes(xs), genome[None, :])
    assert feasible.tolist() == [[True, False]]
    assert mixed_space.from_codes(applied[0, 0]) == apply_delta(mixed_space, xs[0], Delta.of(2.0, "blue"))


def test_feasible_change_set_interval():
    """Offset intervals are intersected over the group."""
    space = FeatureSpace(features=(FeatureDescriptor.numeric("a", 0.0, 10.0),), label_set=(0, 1))
    fcs = feasible_change_set(space, [Instance(values=(2.0,)), Instance(values=(5.0,))])
    assert fcs.intervals == ((-2.0, 5.0),)
    single = feasible_change_set(space, [Instance(values=(0.0,))])
    assert single.intervals == ((0.0, 10.0),)


def test_feasible_change_set_frozen_and_categorical():
    """Frozen features get a zero interval and categorical features their allowed categories."""
    space = FeatureSpace(
        features=(FeatureDescriptor.numeric("age", 18, 99, actionable=False),
                  FeatureDescriptor.categorical("plan", ["a", "b"]),
                  FeatureDescriptor.categorical("sex", ["f", "m"], actionable=False)),
        label_set=(0, 1),
    )
    fcs = feasible_change_set(space, [Instance(values=(30.0, "a", "f"))])
    assert fcs.intervals == ((0.0, 0.0), None, None)
    assert fcs.allowed == (None, ("a", "b"), ())


def test_feasible_change_set_empty_group(plane_space):
    """An empty group has no change set."""
    with pytest.raises(EmptyGroupError):
        feasible_change_set(plane_space, [])


def test_every_offset_in_change_set_applies(plane_space, rng):
    """Sampled offsets inside [l, u] keep every member of random groups in bounds."""
    for _ in range(50):
        group = [Instance(values=tuple(rng.uniform(-10, 10, 2))) for _ in range(int(rng.integers(1, 8)))]
        fcs = feasible_change_set(plane_space, group)
        for _ in range(20):
            d = Delta.of(*rng.uniform(fcs.lower, fcs.upper))
            assert fcs.contains(plane_space, d)
            for x in group:
                apply_delta(plane_space, x, d)
