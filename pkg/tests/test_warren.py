"""
Tests for the max-coverage baseline.
"""
import numpy as np
import pytest

from src.classifiers.linear import LogisticModel
from src.core.delta import Delta, delta_cost
from src.core.space import FeatureDescriptor, FeatureSpace, Instance
from src.explain.single import CfResult, CfSolver
from src.harness.metrics import group_validity
from src.multicf.warren import warren_max_coverage
from src.utils.exceptions import EmptyGroupError


def candidate(*changes):
    delta = Delta.of(*changes)
    return CfResult(delta=delta, achieved=1, cost=delta_cost(delta), valid=True, solver=CfSolver.SEARCH)


@pytest.fixture
def steep_model():
    """Positive iff x0 + 10·x1 > 0."""
    space = FeatureSpace(
        features=(FeatureDescriptor.numeric("x0", -20.0, 20.0), FeatureDescriptor.numeric("x1", -20.0, 20.0)),
        label_set=(0, 1),
    )
    return LogisticModel(space, [1.0, 10.0], 0.0)


@pytest.fixture
def line():
    return [Instance(values=(-float(i), 0.0)) for i in range(1, 11)]


def test_coverage_then_cost(steep_model, line):
    """Coverage counts 3, 7, 7 with costs 3.5, 7.5, 0.75: the cheap full-coverage candidate wins."""
    cfs = [candidate(3.5, None), candidate(7.5, None), candidate(None, 0.75)]
    result = warren_max_coverage(cfs, line, steep_model, 1)
    assert result.delta == cfs[2].delta
    assert sum(result.validity) == 7
    assert result.correctness == 0.7
    assert result.cost == pytest.approx(0.75)


def test_equal_candidates_keep_first_index(steep_model, line):
    """Ties in coverage and cost go to the first candidate."""
    cfs = [candidate(None, 0.75), candidate(None, 0.75)]
    result = warren_max_coverage(cfs, line, steep_model, 1)
    assert result.delta == cfs[0].delta


def test_single_candidate(steep_model, line):
    """A single candidate is returned as is."""
    cfs = [candidate(2.5, None)]
    assert warren_max_coverage(cfs, line, steep_model, 1).delta == cfs[0].delta


def test_infeasible_application_counts_as_invalid(steep_model, line):
    """A candidate leaving a member's bounds does not serve that member."""
    result = warren_max_coverage([candidate(25.0, None)], line, steep_model, 1)
    assert sum(result.validity) == 6


def test_no_candidates(steep_model, line):
    """No candidates or no members is an error."""
    with pytest.raises(EmptyGroupError):
        warren_max_coverage([], line, steep_model, 1)
    with pytest.raises(EmptyGroupError):
        warren_max_coverage([candidate(1.0, None)], [], steep_model, 1)


def test_coverage_is_maximal_on_random_groups(rng):
    """Exhaustively, no candidate serves more members than the chosen one."""
    space = FeatureSpace(features=tuple(FeatureDescriptor.numeric(f"x{i}", -30.0, 30.0) for i in range(3)),
                         label_set=(0, 1))
    for _ in range(100):
        model = LogisticModel(space, rng.normal(size=3), float(rng.normal()))
        points = [Instance(values=tuple(rng.uniform(-10, 10, 3))) for _ in range(40)]
        group = [x for x in points if model.margin(x) <= 0][:12]
        if not group:
            continue
        cfs = [candidate(*rng.normal(0.0, 6.0, 3)) for _ in range(int(rng.integers(1, 10)))]
        result = warren_max_coverage(cfs, group, model, 1)
        coverage = [int(group_validity(cf.delta, group, model, 1).sum()) for cf in cfs]
        assert sum(result.validity) == max(coverage)


def test_sampled_candidates_are_deterministic(steep_model, line, rng):
    """Candidate sampling is seeded and maximises over the sample."""
    cfs = [candidate(float(v), None) for v in rng.uniform(0.5, 9.5, 20)]
    first = warren_max_coverage(cfs, line, steep_model, 1, max_candidates=5, seed=11)
    second = warren_max_coverage(cfs, line, steep_model, 1, max_candidates=5, seed=11)
    assert first == second
    sampled = np.sort(np.random.default_rng(11).choice(20, size=5, replace=False))
    assert sum(first.validity) == max(int(group_validity(cfs[i].delta, line, steep_model, 1).sum()) for i in sampled)
