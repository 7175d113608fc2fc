"""
Tests for the (μ+λ) multi-instance search: objective, operators and invariants.
"""
import numpy as np
import pytest

from src.classifiers.base import Classifier
from src.classifiers.linear import LogisticModel
from src.core.delta import CostKind, Delta, delta_to_genome, genome_to_delta
from src.core.feasibility import feasible_change_set
from src.core.space import FeatureDescriptor, FeatureSpace, Instance
from src.multicf.evolution import (
    EaConfig,
    GroupProblem,
    MultiCfDocument,
    GroupSolution,
    crossover_genomes,
    fitness,
    init_population,
    mean_genome,
    mutate,
    mutate_genomes,
    run_mu_plus_lambda,
    union_genome,
    zero_genome,
)
from src.utils.exceptions import EmptyGroupError, PreconditionError
from src.utils.models import read_document, write_document


@pytest.fixture
def group():
    return [Instance(values=(-1.0, 0.0)), Instance(values=(-2.0, 1.0)), Instance(values=(-0.5, -1.0)),
            Instance(values=(-3.0, 2.0))]


def test_fitness_of_no_change(axis_model, group):
    """Doing nothing costs C per member."""
    assert fitness(Delta.zero(2), group, axis_model, 1, EaConfig(C=10.0)) == 40.0


def test_fitness_of_full_flip(axis_model, group):
    """A delta serving every member costs only its ψ cost."""
    assert fitness(Delta.of(3.5, None), group, axis_model, 1, EaConfig(C=10.0)) == pytest.approx(3.5)


def test_large_c_prefers_validity(axis_model, group):
    """With a huge C, a delta serving more members always wins, whatever its cost."""
    cfg = EaConfig(C=1e6)
    cheap_partial = Delta.of(1.5, None)
    dear_complete = Delta.of(9.0, 3.0)
    assert fitness(dear_complete, group, axis_model, 1, cfg) < fitness(cheap_partial, group, axis_model, 1, cfg)


def test_fitness_of_empty_group(axis_model):
    """The objective of an empty group is undefined."""
    with pytest.raises(EmptyGroupError):
        fitness(Delta.zero(2), [], axis_model, 1, EaConfig())


def test_init_population_forced_zero(plane_space, group, rng):
    """The all-NoChange genome always comes first."""
    fcs = feasible_change_set(plane_space, group)
    population = init_population(plane_space, fcs, EaConfig(mu=1), rng)
    assert population.tolist() == [[0.0, 0.0]]


def test_init_population_contains_clipped_warm_start(plane_space, group, rng):
    """Warm-start deltas enter the population clipped to the change set."""
    fcs = feasible_change_set(plane_space, group)
    warm = Delta.of(50.0, 1.0)
    population = init_population(plane_space, fcs, EaConfig(mu=5), rng, [warm])
    assert population[1].tolist() == [fcs.upper[0], 1.0]


def test_sampled_population_is_feasible(plane_space, rng):
    """Every initial individual lies in [l_i, u_i] over many random configurations."""
    for _ in range(1000):
        size = int(rng.integers(1, 5))
        group = [Instance(values=tuple(rng.uniform(-10, 10, 2))) for _ in range(size)]
        fcs = feasible_change_set(plane_space, group)
        cfg = EaConfig(mu=int(rng.integers(1, 20)), init_change_rate=float(rng.uniform(0.1, 1.0)))
        population = init_population(plane_space, fcs, cfg, rng)
        assert population.shape == (cfg.mu, 2)
        assert np.all(population >= fcs.lower) and np.all(population <= fcs.upper)


def test_mutation_rate_zero_is_identity(plane_space, group, rng):
    """Without mutation a delta stays as it is."""
    fcs = feasible_change_set(plane_space, group)
    d = Delta.of(1.0, -0.5)
    assert mutate(plane_space, d, fcs, EaConfig(mutation_rate=0.0), rng) == d


def test_degenerate_interval_stays_unchanged(rng):
    """A frozen feature is never mutated."""
    space = FeatureSpace(
        features=(FeatureDescriptor.numeric("a", 0.0, 10.0), FeatureDescriptor.numeric("b", 0.0, 10.0, actionable=False)),
        label_set=(0, 1),
    )
    fcs = feasible_change_set(space, [Instance(values=(5.0, 5.0))])
    cfg = EaConfig(mutation_rate=1.0, sparsity_reset_rate=0.0)
    for _ in range(200):
        assert mutate(space, Delta.of(1.0, None), fcs, cfg, rng).changes[1].op == "none"


def test_mutation_and_crossover_stay_feasible(mixed_space, rng):
    """10⁴ mutations and crossovers of feasible genomes remain in the change set."""
    group = [Instance(values=(float(v), c)) for v, c in zip(rng.uniform(0, 10, 5), ["red", "blue", "red", "green", "red"])]
    fcs = feasible_change_set(mixed_space, group)
    coded = mixed_space.coded()
    allowed = fcs.allowed_indices(mixed_space)
    cfg = EaConfig(mutation_rate=0.8)
    parents = init_population(mixed_space, fcs, EaConfig(mu=100, init_change_rate=0.9), rng)
    for _ in range(100):
        children = crossover_genomes(parents, parents[rng.permutation(100)], 0.7, rng)
        children = mutate_genomes(coded, children, fcs, allowed, cfg, rng)
        assert np.all(children[:, 0] >= fcs.lower[0]) and np.all(children[:, 0] <= fcs.upper[0])
        assert np.all(np.isin(children[:, 1], [-1.0, 0.0, 1.0, 2.0]))
        for genome in children[:5]:
            assert fcs.contains(mixed_space, genome_to_delta(mixed_space, genome))
        parents = children


def test_mean_genome_consensus(mixed_space):
    """The consensus averages offsets and takes the most frequent category."""
    genomes = np.array([[1.0, 2.0], [3.0, 2.0], [2.0, -1.0]])
    assert mean_genome(mixed_space.coded(), genomes).tolist() == [2.0, 2.0]
    assert zero_genome(mixed_space.coded()).tolist() == [0.0, -1.0]


def test_union_genome_keeps_every_change(mixed_space):
    """The union takes the largest raise (or deepest cut) and the most frequent set category."""
    coded = mixed_space.coded()
    genomes = np.array([[1.0, -1.0], [-3.0, 2.0], [2.0, 2.0], [0.0, 0.0]])
    assert union_genome(coded, genomes).tolist() == [2.0, 2.0]
    assert union_genome(coded, genomes, raise_first=False).tolist() == [-3.0, 2.0]
    cuts = np.array([[-0.5, -1.0], [-2.0, -1.0]])
    assert union_genome(coded, cuts).tolist() == [-2.0, -1.0]


class SegmentModel(Classifier):
    """Positive iff the feature of the instance's own segment exceeds 5."""

    def margin_codes(self, codes):
        codes = np.asarray(codes, dtype=float)
        return np.where(codes[..., 0] < 0.5, codes[..., 1] - 5.0, codes[..., 2] - 5.0)


@pytest.fixture
def segment_model():
    space = FeatureSpace(
        features=(
            FeatureDescriptor.numeric("segment", 0.0, 1.0, actionable=False),
            FeatureDescriptor.numeric("a", 0.0, 10.0),
            FeatureDescriptor.numeric("b", 0.0, 10.0),
        ),
        label_set=(0, 1),
    )
    return SegmentModel(space)


def test_mixed_segments_are_served_from_the_warm_start(segment_model):
    """Members needing different changes are all served by the union of their counterfactuals."""
    group = [Instance(values=(0.0, a, 1.0)) for a in (1.0, 2.0, 3.0)]
    group += [Instance(values=(1.0, 1.0, b)) for b in (2.0, 4.0)]
    warm = [Delta.of(None, 5.5 - a, None) for a in (1.0, 2.0, 3.0)]
    warm += [Delta.of(None, None, 5.5 - b) for b in (2.0, 4.0)]
    space = segment_model.space
    genomes = np.vstack([delta_to_genome(space, d) for d in warm])
    assert union_genome(space.coded(), genomes).tolist() == [0.0, 4.5, 3.5]
    # zero, both unions and the mean fill the whole population; the mean alone serves nobody
    result = run_mu_plus_lambda(group, segment_model, 1, EaConfig(mu=4, generations=0, seed=3), warm)
    assert result.correctness == 1.0
    assert result.delta == genome_to_delta(space, np.array([0.0, 4.5, 3.5]))


def test_search_serves_whole_group(axis_model, group):
    """The search finds one delta flipping every member."""
    result = run_mu_plus_lambda(group, axis_model, 1, EaConfig(mu=20, lambda_=40, generations=60, seed=1))
    assert result.correctness == 1.0
    assert all(result.validity)
    assert result.delta.changes[0].value > 3.0


def test_search_with_zero_generations(axis_model, group):
    """With no generations the best initial individual is returned."""
    result = run_mu_plus_lambda(group, axis_model, 1, EaConfig(generations=0, C=1e-3, seed=2))
    assert result.delta.is_zero
    assert result.generations_run == 0
    assert len(result.trace) == 1


def test_search_is_deterministic(axis_model, group):
    """The same seed gives the same result."""
    cfg = EaConfig(mu=10, lambda_=20, generations=30, seed=5)
    assert run_mu_plus_lambda(group, axis_model, 1, cfg) == run_mu_plus_lambda(group, axis_model, 1, cfg)


def test_trace_is_monotone(plane_space, rng):
    """The best objective never increases over 50 random runs."""
    for run in range(50):
        w = rng.normal(size=2)
        model = LogisticModel(plane_space, w, float(rng.normal()))
        points = [Instance(values=tuple(rng.uniform(-8, 8, 2))) for _ in range(30)]
        negatives = [x for x in points if model.margin(x) <= 0][:6]
        if not negatives:
            continue
        cfg = EaConfig(mu=8, lambda_=16, generations=25, C=float(rng.uniform(0.5, 50)), seed=run, patience=None)
        trace = np.array(run_mu_plus_lambda(negatives, model, 1, cfg).trace)
        assert np.all(np.diff(trace) <= 0.0)


def test_result_is_feasible_for_every_member(axis_model, group):
    """The result applies to every member without leaving the bounds."""
    result = run_mu_plus_lambda(group, axis_model, 1, EaConfig(mu=10, lambda_=20, generations=20, seed=3))
    fcs = feasible_change_set(axis_model.space, group)
    assert fcs.contains(axis_model.space, result.delta)


def test_early_stop(axis_model, group):
    """The search stops after patience generations without improvement."""
    result = run_mu_plus_lambda(group, axis_model, 1, EaConfig(generations=500, patience=5, seed=4))
    assert result.generations_run < 500


def test_search_preconditions(axis_model, group):
    """Empty groups, mixed predictions and groups already at the target are refused."""
    with pytest.raises(EmptyGroupError):
        run_mu_plus_lambda([], axis_model, 1, EaConfig())
    with pytest.raises(PreconditionError):
        run_mu_plus_lambda(group + [Instance(values=(5.0, 0.0))], axis_model, 1, EaConfig())
    with pytest.raises(PreconditionError):
        run_mu_plus_lambda(group, axis_model, 0, EaConfig())


def test_sparsity_cost_kind_prefers_single_feature(axis_model, group):
    """Under the sparsity cost one changed feature beats two."""
    cfg = EaConfig(mu=20, lambda_=40, generations=80, cost_kind=CostKind.SPARSITY, seed=6)
    result = run_mu_plus_lambda(group, axis_model, 1, cfg)
    assert result.correctness == 1.0
    assert result.delta.changes[1].op == "none"


def test_group_problem_matches_fitness(axis_model, group):
    """The vectorised objective agrees with fitness on single deltas."""
    cfg = EaConfig(C=7.0)
    problem = GroupProblem(axis_model, axis_model.space.to_codes(group), 1, cfg)
    deltas = [Delta.zero(2), Delta.of(1.2, None), Delta.of(4.0, -0.5)]
    values, validity = problem.evaluate(np.vstack([delta_to_genome(axis_model.space, d) for d in deltas]))
    assert validity.shape == (3, 4)
    for d, value in zip(deltas, values):
        assert value == pytest.approx(fitness(d, group, axis_model, 1, cfg))


def test_multicf_document(tmp_path, axis_model, group):
    """Multi-instance results survive a file round trip."""
    result = run_mu_plus_lambda(group, axis_model, 1, EaConfig(mu=5, lambda_=10, generations=5))
    document = MultiCfDocument(method="ea", target=1,
                               solutions=(GroupSolution(group=0, members=(0, 1, 2, 3), result=result),))
    assert read_document(write_document(tmp_path / "multicf.json", document), MultiCfDocument) == document
