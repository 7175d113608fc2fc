"""
(μ+λ) evolutionary search for multi-instance counterfactuals.

Minimises the merged objective

    cost(δ) + C · Σ_j 1(h(x_j ⊕ δ) != y_cf)

over the feasible change set of a group. Individuals are genome rows (see
src.core.delta); initialisation, crossover and mutation all keep them inside
the feasible change set.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field

from src.classifiers.base import Classifier
from src.core.delta import (
    KEEP_CATEGORY,
    CostKind,
    Delta,
    apply_genomes,
    delta_cost,
    delta_to_genome,
    genome_costs,
    genome_to_delta,
)
from src.core.feasibility import FeasibleChangeSet, feasible_change_set_from_codes
from src.core.space import CodedSpace, FeatureSpace, Instance, Label
from src.utils.exceptions import EmptyGroupError, PreconditionError
from src.utils.logging import get_logger
from src.utils.models import ConfigModel, FrozenModel, VersionedDocument
from src.utils.seeding import make_rng

logger = get_logger(__name__)

# Smallest improvement that resets the early-stop counter
IMPROVEMENT_TOLERANCE = 1e-12


class EaConfig(ConfigModel):
    """Parameters of the (μ+λ) search."""

    mu: int = Field(default=50, ge=1, description="Population size")
    lambda_: int = Field(default=100, ge=1, alias="lambda", description="Offspring per generation")
    generations: int = Field(default=200, ge=0)
    mutation_rate: float = Field(default=0.2, ge=0.0, le=1.0, description="Per-gene mutation probability")
    mutation_scale: float = Field(default=0.1, gt=0.0, description="Step size as a fraction of u_i - l_i")
    crossover_rate: float = Field(default=0.7, ge=0.0, le=1.0)
    tournament_size: int = Field(default=3, ge=1)
    sparsity_reset_rate: float = Field(
        default=0.1, ge=0.0, le=1.0, description="Probability that a mutated gene is reset to no change"
    )
    init_change_rate: float = Field(
        default=0.3, ge=0.0, le=1.0, description="Per-gene change probability of random initial individuals"
    )
    C: float = Field(default=100.0, gt=0.0, description="Weight of the per-instance 0-1 loss")
    cost_kind: CostKind = CostKind.PSI
    weights: Optional[Tuple[float, ...]] = Field(default=None, description="Per-feature ψ weights")
    margin_weight: float = Field(default=0.0, ge=0.0, description="Weight of the hinge term on the model margin")
    seed: int = Field(default=0, ge=0)
    patience: Optional[int] = Field(default=30, ge=1, description="Generations without improvement before stopping")
    warm_start: bool = Field(default=True, description="Seed the population with individual counterfactuals")


class MultiCfResult(FrozenModel):
    """Outcome of one multi-instance search."""

    delta: Delta
    validity: Tuple[bool, ...]
    correctness: float = Field(..., ge=0.0, le=1.0)
    cost: float = Field(..., ge=0.0)
    fitness: float
    trace: Tuple[float, ...] = ()
    generations_run: int = 0


class GroupSolution(FrozenModel):
    """Multi-instance counterfactual of one group."""

    group: int
    members: Tuple[int, ...]
    is_noise: bool = False
    result: MultiCfResult


class MultiCfDocument(VersionedDocument):
    """Solutions for every group of a grouping."""

    method: str
    target: Label
    solutions: Tuple[GroupSolution, ...]


class GroupProblem:
    """Vectorised objective for one group, model and target label."""

    def __init__(self, model: Classifier, codes: np.ndarray, target: int, cfg: EaConfig,
                 fcs: Optional[FeasibleChangeSet] = None):
        self.model = model
        self.space: FeatureSpace = model.space
        self.coded: CodedSpace = model.space.coded()
        self.codes = codes
        self.target = int(target)
        self.cfg = cfg
        self.fcs = fcs if fcs is not None else feasible_change_set_from_codes(self.space, codes)
        self.allowed = self.fcs.allowed_indices(self.space)
        self.lower = self.fcs.lower
        self.upper = self.fcs.upper
        self.weights = np.asarray(cfg.weights, dtype=float) if cfg.weights is not None else None

    @property
    def size(self) -> int:
        return int(self.codes.shape[0])

    def validity(self, genomes: np.ndarray) -> np.ndarray:
        """(k, n) mask: application feasible and predicted label equals the target."""
        applied, feasible = apply_genomes(self.coded, self.codes, genomes)
        predicted = self.model.predict_index_codes(applied)
        return feasible & (predicted == self.target)

    def evaluate(self, genomes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Objective values and validity for a (k, d) genome matrix.

        Returns:
            (fitness of shape (k,), validity of shape (k, n))
        """
        genomes = np.atleast_2d(genomes)
        applied, feasible = apply_genomes(self.coded, self.codes, genomes)
        valid = feasible & (self.model.predict_index_codes(applied) == self.target)
        fitness = genome_costs(self.coded, genomes, self.cfg.cost_kind, self.weights)
        fitness = fitness + self.cfg.C * (~valid).sum(axis=1)
        if self.cfg.margin_weight > 0.0 and self.space.is_binary:
            sign = 1.0 if self.target == 1 else -1.0
            hinge = np.maximum(0.0, -sign * self.model.margin_codes(applied))
            fitness = fitness + self.cfg.margin_weight * hinge.sum(axis=1)
        return fitness, valid


def fitness(d: Delta, group: Sequence[Instance], m: Classifier, y_cf: Label, cfg: EaConfig) -> float:
    """
    Merged objective of a delta on a group: cost(d) + C · #(members not mapped to y_cf).

    Args:
        d: Candidate delta (should lie in the group's feasible change set)
        group: The instances
        m: The classifier
        y_cf: Target label
        cfg: Search configuration (C, cost kind, weights, margin weight)

    Returns:
        The objective value; lower is better
    """
    if len(group) == 0:
        raise EmptyGroupError("fitness of an empty group")
    space = m.space
    problem = GroupProblem(m, space.to_codes(group), space.label_index(y_cf), cfg)
    values, _ = problem.evaluate(delta_to_genome(space, d)[None, :])
    return float(values[0])


def zero_genome(coded: CodedSpace) -> np.ndarray:
    """Genome of the all-NoChange delta."""
    return np.where(coded.numeric, 0.0, KEEP_CATEGORY)


def mean_genome(coded: CodedSpace, genomes: np.ndarray) -> np.ndarray:
    """
    Consensus of several genomes: mean offset for numeric genes, most
    frequent code (no change included, lowest code on ties) for categorical genes.
    """
    consensus = genomes.mean(axis=0)
    for column in np.nonzero(~coded.numeric)[0]:
        values, counts = np.unique(genomes[:, column], return_counts=True)
        consensus[column] = values[int(np.argmax(counts))]
    return consensus


def union_genome(coded: CodedSpace, genomes: np.ndarray, raise_first: bool = True) -> np.ndarray:
    """
    Elementwise union of several genomes: per numeric gene the largest raise
    (or, with raise_first off, the deepest cut), falling back to the other
    direction when no genome moves that way; per categorical gene the most
    frequent set category, no change only when no genome sets one.

    Members of different segments need different changes; the mean dilutes
    each of them, the union keeps all of them.
    """
    raised = np.where(genomes > 0.0, genomes, 0.0).max(axis=0)
    lowered = np.where(genomes < 0.0, genomes, 0.0).min(axis=0)
    union = np.where(raised > 0.0, raised, lowered) if raise_first else np.where(lowered < 0.0, lowered, raised)
    for column in np.nonzero(~coded.numeric)[0]:
        changed = genomes[:, column][genomes[:, column] != KEEP_CATEGORY]
        if changed.size == 0:
            union[column] = KEEP_CATEGORY
            continue
        values, counts = np.unique(changed, return_counts=True)
        union[column] = values[int(np.argmax(counts))]
    return union


def sample_genomes(coded: CodedSpace, fcs: FeasibleChangeSet, allowed: Sequence[np.ndarray], count: int,
                   change_rate: float, rng: np.random.Generator) -> np.ndarray:
    """Random feasible genomes: each gene changes with probability change_rate."""
    d = coded.dimension
    change = rng.random((count, d)) < change_rate
    numeric = rng.uniform(fcs.lower, fcs.upper, size=(count, d))
    picks = rng.random((count, d))
    genomes = np.tile(zero_genome(coded), (count, 1))
    genomes = np.where(coded.numeric & change, numeric, genomes)
    for column, choices in enumerate(allowed):
        if coded.numeric[column] or choices.size == 0:
            continue
        chosen = choices[np.minimum((picks[:, column] * choices.size).astype(int), choices.size - 1)]
        genomes[:, column] = np.where(change[:, column], chosen, KEEP_CATEGORY)
    return genomes


def init_population(space: FeatureSpace, fcs: FeasibleChangeSet, cfg: EaConfig, rng: np.random.Generator,
                    warm_start: Sequence[Delta] = ()) -> np.ndarray:
    """
    Build the initial population of mu feasible genomes.

    The all-NoChange genome comes first, then warm-start deltas clipped into
    the change set, then uniformly sampled individuals.

    Args:
        space: The feature space
        fcs: Feasible change set of the group
        cfg: Search configuration (mu, init_change_rate)
        rng: Random generator
        warm_start: Deltas to include (e.g. individual counterfactuals, their union and mean)

    Returns:
        A (mu, d) genome matrix
    """
    coded = space.coded()
    allowed = fcs.allowed_indices(space)
    rows = [zero_genome(coded)]
    for delta in warm_start:
        if len(rows) >= cfg.mu:
            break
        rows.append(fcs.clip_genomes(coded, delta_to_genome(space, delta)[None, :], allowed)[0])
    remaining = cfg.mu - len(rows)
    population = np.vstack(rows)
    if remaining > 0:
        sampled = sample_genomes(coded, fcs, allowed, remaining, cfg.init_change_rate, rng)
        population = np.vstack([population, sampled])
    return population


def mutate_genomes(coded: CodedSpace, genomes: np.ndarray, fcs: FeasibleChangeSet,
                   allowed: Sequence[np.ndarray], cfg: EaConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Mutate a (k, d) genome matrix.

    Each gene mutates with probability mutation_rate. A mutated gene is reset
    to no change with probability sparsity_reset_rate; otherwise numeric genes
    get a Gaussian step with standard deviation mutation_scale·(u_i - l_i)·s,
    s log-uniform in [0.01, 1], and categorical genes are resampled from
    {no change} ∪ allowed labels. Numeric genes are clipped back to [l_i, u_i].
    """
    genomes = np.atleast_2d(genomes)
    shape = genomes.shape
    mutate = rng.random(shape) < cfg.mutation_rate
    reset = rng.random(shape) < cfg.sparsity_reset_rate
    step = rng.standard_normal(shape) * 10.0 ** rng.uniform(-2.0, 0.0, size=shape)
    picks = rng.random(shape)

    width = fcs.upper - fcs.lower
    perturbed = np.clip(genomes + step * cfg.mutation_scale * width, fcs.lower, fcs.upper)
    mutated = np.where(coded.numeric, perturbed, genomes)
    for column, choices in enumerate(allowed):
        if coded.numeric[column]:
            continue
        options = np.concatenate([[KEEP_CATEGORY], choices.astype(float)])
        index = np.minimum((picks[:, column] * options.size).astype(int), options.size - 1)
        mutated[:, column] = options[index]
    mutated = np.where(reset, zero_genome(coded), mutated)
    return np.where(mutate, mutated, genomes)


def mutate(space: FeatureSpace, d: Delta, fcs: FeasibleChangeSet, cfg: EaConfig,
           rng: np.random.Generator) -> Delta:
    """Mutate a single delta (see mutate_genomes)."""
    coded = space.coded()
    genome = delta_to_genome(space, d)[None, :]
    return genome_to_delta(space, mutate_genomes(coded, genome, fcs, fcs.allowed_indices(space), cfg, rng)[0])


def crossover_genomes(first: np.ndarray, second: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover of paired parents; unpaired (probability 1 - rate) children copy the first parent."""
    cross = rng.random(first.shape[0]) < rate
    take_second = rng.random(first.shape) < 0.5
    return np.where(cross[:, None] & take_second, second, first)


def tournament(fitness_values: np.ndarray, count: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of count tournament winners (lowest fitness, first entrant on ties)."""
    entrants = rng.integers(0, fitness_values.shape[0], size=(count, size))
    winners = np.argmin(fitness_values[entrants], axis=1)
    return entrants[np.arange(count), winners]


def run_mu_plus_lambda(group: Sequence[Instance], m: Classifier, y_cf: Label, cfg: EaConfig,
                       warm_start: Sequence[Delta] = ()) -> MultiCfResult:
    """
    Solve the merged multi-instance objective on one group with a (μ+λ) search.

    Each generation draws λ offspring by tournament selection, uniform
    crossover and mutation; the best μ of parents and offspring survive. The
    best individual is therefore never lost and the trace of best objective
    values is non-increasing.

    Args:
        group: Non-empty instances sharing a prediction different from y_cf
        m: The classifier
        y_cf: Target label
        cfg: Search configuration
        warm_start: Individual counterfactuals of the members; used (with
            their union and mean) when cfg.warm_start is set

    Returns:
        The best delta found with its validity, correctness, cost and trace

    Raises:
        EmptyGroupError: If the group is empty
        PreconditionError: If members disagree in prediction or already have y_cf
    """
    if len(group) == 0:
        raise EmptyGroupError("cannot search a counterfactual for an empty group")
    space = m.space
    codes = space.to_codes(group)
    target = space.label_index(y_cf)
    current = m.predict_index_codes(codes)
    if np.any(current != current[0]):
        raise PreconditionError("group members must share the same prediction")
    if current[0] == target:
        raise PreconditionError(f"group is already predicted as {y_cf!r}")

    problem = GroupProblem(m, codes, target, cfg)
    rng = make_rng(cfg.seed)
    seeds: List[Delta] = []
    if cfg.warm_start and len(warm_start) > 0:
        genomes = np.vstack([delta_to_genome(space, d) for d in warm_start])
        seeds = [
            genome_to_delta(space, union_genome(problem.coded, genomes, raise_first=True)),
            genome_to_delta(space, union_genome(problem.coded, genomes, raise_first=False)),
            genome_to_delta(space, mean_genome(problem.coded, genomes)),
        ] + list(warm_start)

    population = init_population(space, problem.fcs, cfg, rng, seeds)
    scores, _ = problem.evaluate(population)
    order = np.argsort(scores, kind="stable")
    population, scores = population[order], scores[order]
    trace = [float(scores[0])]
    stall = 0
    generation = 0

    for generation in range(1, cfg.generations + 1):
        first = tournament(scores, cfg.lambda_, cfg.tournament_size, rng)
        second = tournament(scores, cfg.lambda_, cfg.tournament_size, rng)
        offspring = crossover_genomes(population[first], population[second], cfg.crossover_rate, rng)
        offspring = mutate_genomes(problem.coded, offspring, problem.fcs, problem.allowed, cfg, rng)
        offspring = problem.fcs.clip_genomes(problem.coded, offspring, problem.allowed)
        offspring_scores, _ = problem.evaluate(offspring)

        union = np.vstack([population, offspring])
        union_scores = np.concatenate([scores, offspring_scores])
        survivors = np.argsort(union_scores, kind="stable")[:cfg.mu]
        previous_best = scores[0]
        population, scores = union[survivors], union_scores[survivors]
        trace.append(float(scores[0]))

        if scores[0] < previous_best - IMPROVEMENT_TOLERANCE:
            stall = 0
        else:
            stall += 1
        if cfg.patience is not None and stall >= cfg.patience:
            logger.debug("Early stop", generation=generation, best=float(scores[0]))
            break

    best = population[0]
    validity = problem.validity(best[None, :])[0]
    delta = genome_to_delta(space, best)
    result = MultiCfResult(
        delta=delta,
        validity=tuple(bool(v) for v in validity),
        correctness=float(validity.mean()),
        cost=delta_cost(delta, cfg.weights),
        fitness=float(scores[0]),
        trace=tuple(trace),
        generations_run=generation,
    )
    logger.debug("Search finished", group_size=problem.size, correctness=result.correctness,
                 cost=result.cost, generations=generation)
    return result
