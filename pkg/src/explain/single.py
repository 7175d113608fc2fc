"""
Individual counterfactual explanations.

Two solvers: the closed-form minimum-L2 counterfactual of a linear model and
a derivative-free search that runs the (μ+λ) engine on a one-instance group.
"""
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, model_validator

from src.classifiers.base import Classifier
from src.core.delta import CostKind, Delta, apply_delta, delta_cost
from src.core.space import FeatureSpace, Instance, Label
from src.multicf.evolution import EaConfig, run_mu_plus_lambda
from src.utils.exceptions import (
    InfeasibleApplicationError,
    NoCounterfactualError,
    PreconditionError,
    UnsupportedModelError,
)
from src.utils.logging import get_logger
from src.utils.models import ConfigModel, FrozenModel, VersionedDocument
from src.utils.seeding import derive_seed

logger = get_logger(__name__)


class CfSolver(str, Enum):
    """Enum for individual counterfactual solvers."""
    AUTO = "auto"
    CLOSED_FORM = "closed_form"
    SEARCH = "search"


class CfTemplate(ConfigModel):
    """Everything a counterfactual request needs except the instance."""

    target: Optional[Label] = Field(default=None, description="Requested label y_cf")
    cost_kind: CostKind = CostKind.PSI
    weights: Optional[Tuple[float, ...]] = None
    C: float = Field(default=0.01, gt=0.0, description="Weight of the cost against the 0-1 loss")
    epsilon: float = Field(
        default=1e-2, gt=0.0, description="Overshoot past the decision boundary in range-normalised units"
    )
    solver: CfSolver = CfSolver.AUTO
    budget: int = Field(default=100, ge=0, description="Search generations")
    population: int = Field(default=20, ge=1)
    offspring: int = Field(default=40, ge=1)
    patience: Optional[int] = Field(default=25, ge=1)
    margin_weight: float = Field(default=0.0, ge=0.0)
    seed: int = Field(default=0, ge=0)

    def for_instance(self, instance: Instance, seed: Optional[int] = None) -> "CfRequest":
        values = self.model_dump()
        if seed is not None:
            values["seed"] = seed
        return CfRequest(instance=instance, **values)


class CfRequest(CfTemplate):
    """A counterfactual request for one instance."""

    instance: Instance

    @model_validator(mode="after")
    def check_target(self) -> "CfRequest":
        if self.target is None:
            raise ValueError("a counterfactual request needs a target label")
        return self


class CfResult(FrozenModel):
    """An individual counterfactual and whether it reaches the target."""

    delta: Delta
    achieved: Label
    cost: float = Field(..., ge=0.0)
    valid: bool
    solver: CfSolver


def _finish(m: Classifier, req: CfRequest, delta: Delta, solver: CfSolver) -> CfResult:
    """Check a delta by re-predicting the changed instance."""
    try:
        achieved = m.predict(apply_delta(m.space, req.instance, delta))
    except InfeasibleApplicationError as exc:
        logger.warning("Counterfactual leaves the feature bounds", feature=exc.feature, solver=solver.value)
        achieved = m.predict(req.instance)
        return CfResult(delta=delta, achieved=achieved, cost=delta_cost(delta, req.weights), valid=False,
                        solver=solver)
    valid = m.space.label_index(achieved) == m.space.label_index(req.target)
    return CfResult(delta=delta, achieved=achieved, cost=delta_cost(delta, req.weights), valid=valid, solver=solver)


def closed_form_linear_cf(m: Classifier, req: CfRequest) -> CfResult:
    """
    Minimum-L2 counterfactual of a linear model.

    δ = (s·ε·||w ⊙ r|| - (w·z + b)) / ||w||² · w with s = +1 towards label_set[1],
    -1 towards label_set[0] and r the feature ranges u - l. The changed instance
    lies ε past the decision boundary in range-normalised units.

    Args:
        m: Model with a linear view over an all-numeric, all-actionable space
        req: The request

    Returns:
        The counterfactual; all-NoChange if x already has the target label

    Raises:
        UnsupportedModelError: No linear view, or categorical/frozen features present
        NoCounterfactualError: The weight vector is zero
    """
    view = m.linear_view
    if view is None:
        raise UnsupportedModelError(f"{type(m).__name__} has no linear decision function")
    if not m.space.all_numeric_actionable:
        raise UnsupportedModelError("closed form needs numeric, actionable features only")
    w = view.w
    norm_sq = float(w @ w)
    if norm_sq == 0.0:
        raise NoCounterfactualError("zero weight vector: the prediction cannot change")

    target = m.space.label_index(req.target)
    margin = m.margin(req.instance)
    if int(margin > 0.0) == target:
        return _finish(m, req, Delta.zero(m.space.dimension), CfSolver.CLOSED_FORM)

    sign = 1.0 if target == 1 else -1.0
    coded = m.space.coded()
    overshoot = req.epsilon * float(np.linalg.norm(w * (coded.upper - coded.lower)))
    offsets = (sign * overshoot - margin) / norm_sq * w
    return _finish(m, req, Delta.of(*[float(v) for v in offsets]), CfSolver.CLOSED_FORM)


def search_cf(m: Classifier, req: CfRequest) -> CfResult:
    """
    Black-box counterfactual by (μ+λ) search on the singleton group {x}.

    Minimises 0-1 loss + C·cost inside the feasible change set of {x}; the
    engine is run with weight 1/C on the loss, which has the same minimisers.
    An invalid result (budget exhausted) is returned with valid=False.

    Args:
        m: Any classifier
        req: The request (budget, population, offspring, seed)

    Returns:
        The best counterfactual found
    """
    current = m.predict(req.instance)
    if m.space.label_index(current) == m.space.label_index(req.target):
        return _finish(m, req, Delta.zero(m.space.dimension), CfSolver.SEARCH)
    cfg = EaConfig(
        mu=req.population,
        lambda_=req.offspring,
        generations=req.budget,
        C=1.0 / req.C,
        cost_kind=req.cost_kind,
        weights=req.weights,
        margin_weight=req.margin_weight,
        seed=req.seed,
        patience=req.patience,
        warm_start=False,
    )
    result = run_mu_plus_lambda([req.instance], m, req.target, cfg)
    return _finish(m, req, result.delta, CfSolver.SEARCH)


def solve_cf(m: Classifier, req: CfRequest) -> CfResult:
    """Run the solver selected by the request (auto: closed form when available)."""
    solver = req.solver
    if solver == CfSolver.AUTO:
        closed_form = m.linear_view is not None and m.space.all_numeric_actionable
        solver = CfSolver.CLOSED_FORM if closed_form else CfSolver.SEARCH
    if solver == CfSolver.CLOSED_FORM:
        return closed_form_linear_cf(m, req)
    return search_cf(m, req)


def batch_cf(m: Classifier, xs: Sequence[Instance], template: CfTemplate, threads: int = 1) -> List[CfResult]:
    """
    Individual counterfactuals for instances sharing one prediction.

    Instance i is solved with seed derive_seed(template.seed, i), so the
    output does not depend on the number of threads.

    Args:
        m: The classifier
        xs: Instances with identical current prediction
        template: Request settings shared by all instances
        threads: Worker threads

    Returns:
        One result per instance, in input order

    Raises:
        PreconditionError: If the instances have different predictions
    """
    if len(xs) == 0:
        return []
    predicted = m.predict_index_codes(m.space.to_codes(xs))
    if np.any(predicted != predicted[0]):
        raise PreconditionError("all instances must share the same prediction")

    def solve(index: int) -> CfResult:
        return solve_cf(m, template.for_instance(xs[index], derive_seed(template.seed, index)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, range(len(xs))))
    else:
        results = [solve(index) for index in range(len(xs))]
    logger.info("Computed individual counterfactuals", count=len(results),
                valid=sum(result.valid for result in results))
    return results


def explain_instances(m: Classifier, xs: Sequence[Instance], template: CfTemplate,
                      threads: int = 1) -> List[CfResult]:
    """
    Individual counterfactuals for instances with any predictions.

    Instances not yet predicted as the target are solved together by
    batch_cf; the others get an all-NoChange result that is valid by
    definition. Results stay aligned with xs.
    """
    if len(xs) == 0:
        return []
    target = m.space.label_index(template.target)
    predicted = m.predict_index_codes(m.space.to_codes(xs))
    pending = [index for index in range(len(xs)) if predicted[index] != target]
    solved = dict(zip(pending, batch_cf(m, [xs[i] for i in pending], template, threads)))
    unchanged = CfResult(delta=Delta.zero(m.space.dimension), achieved=m.space.label_set[target], cost=0.0, valid=True,
                         solver=template.solver)
    if len(solved) < len(xs):
        logger.info("Instances already at the target", count=len(xs) - len(solved))
    return [solved.get(index, unchanged) for index in range(len(xs))]


class CfBatch(VersionedDocument):
    """Individual counterfactuals of several instances, as written by the explain command."""

    space: FeatureSpace
    target: Label
    instances: Tuple[Instance, ...]
    results: Tuple[CfResult, ...]

    @model_validator(mode="after")
    def check_lengths(self) -> "CfBatch":
        if len(self.instances) != len(self.results):
            raise ValueError("one result per instance is required")
        return self
