"""
Cross-validated benchmark of multi-instance counterfactuals.

Per fold: train a model on the training split, take the test instances it
predicts as the negative label (label_set[0]), compute their individual
counterfactuals, group them under each condition and solve every group with
each method.

Seed derivation from the master seed:
    fold shuffle        derive_seed(master, 10**6)
    fold i              fold_seed = derive_seed(master, i)
    model               derive_seed(fold_seed, 0)
    individual CFs      derive_seed(derive_seed(fold_seed, 1), instance)
    EA on group g       derive_seed(fold_seed, 2, g)
    candidate sampling  derive_seed(fold_seed, 3, g)

The seeds of a group do not depend on the condition, so equal groups under
different conditions get equal results.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import Field, model_validator

from src.classifiers.base import Classifier, LabeledData, TrainConfig
from src.classifiers.training import train_model
from src.core.space import FeatureSpace, Instance
from src.explain.single import CfResult, CfTemplate, batch_cf
from src.grouping.partition import Grouping
from src.grouping.strategies import ClusterParams, ClusterStrategy, group_by_cf_directions, group_by_instances
from src.harness.datasets import load_dataset, load_schema
from src.harness.metrics import cost_metric
from src.harness.report import (
    Condition,
    EvalReport,
    FoldSummary,
    GroupRecord,
    Method,
    RunManifest,
    aggregate,
)
from src.harness.synthetic import SyntheticLayout, make_synthetic
from src.multicf.evolution import EaConfig, MultiCfResult, run_mu_plus_lambda
from src.multicf.warren import warren_max_coverage
from src.utils.exceptions import DegenerateTrainingError, InsufficientDataError, PreconditionError
from src.utils.logging import bound_run_context, get_logger
from src.utils.models import FrozenModel, VersionedDocument, read_document
from src.utils.seeding import derive_seed, make_rng

logger = get_logger(__name__)

SHUFFLE_KEY = 10 ** 6


class DatasetSource(FrozenModel):
    """A CSV file and its schema."""

    data: str
    schema_path: str = Field(..., alias="schema")


class SyntheticSource(FrozenModel):
    """A generated dataset."""

    layout: SyntheticLayout = SyntheticLayout()
    n: int = Field(default=400, ge=2)
    seed: int = Field(default=0, ge=0)


class BenchmarkConfig(VersionedDocument):
    """Everything a benchmark run depends on (apart from the thread count)."""

    name: str = "benchmark"
    dataset: Optional[DatasetSource] = None
    synthetic: Optional[SyntheticSource] = None
    model: TrainConfig = TrainConfig()
    cf: CfTemplate = CfTemplate()
    cluster_instances: ClusterParams = ClusterParams(strategy=ClusterStrategy.DBSCAN_INSTANCES, eps=1.0)
    cluster_cfs: ClusterParams = ClusterParams()
    ea: EaConfig = EaConfig()
    folds: int = Field(default=5, ge=2)
    methods: Tuple[Method, ...] = Field(default=(Method.EA, Method.WARREN), min_length=1)
    conditions: Tuple[Condition, ...] = Field(
        default=(Condition.NONE, Condition.CLUSTER_INSTANCES, Condition.CLUSTER_CFS), min_length=1
    )
    warren_max_candidates: Optional[int] = Field(default=None, ge=1)
    output_dir: Optional[str] = Field(default=None, exclude=True)
    seed: int = Field(default=0, ge=0, description="Master seed")

    @model_validator(mode="after")
    def check_source(self) -> "BenchmarkConfig":
        if (self.dataset is None) == (self.synthetic is None):
            raise ValueError("exactly one of 'dataset' and 'synthetic' must be given")
        return self


def load_benchmark_config(path: Union[str, Path]) -> BenchmarkConfig:
    """Read a benchmark configuration; dataset paths are relative to the file."""
    cfg = read_document(path, BenchmarkConfig)
    if cfg.dataset is None:
        return cfg
    base = Path(path).parent

    def resolve(value: str) -> str:
        candidate = Path(value)
        return str(candidate if candidate.is_absolute() else base / candidate)

    source = DatasetSource(data=resolve(cfg.dataset.data), schema=resolve(cfg.dataset.schema_path))
    return cfg.model_copy(update={"dataset": source})


def load_data(cfg: BenchmarkConfig) -> Tuple[FeatureSpace, LabeledData]:
    if cfg.synthetic is not None:
        return make_synthetic(cfg.synthetic.layout, cfg.synthetic.n, cfg.synthetic.seed)
    return load_dataset(cfg.dataset.data, load_schema(cfg.dataset.schema_path))


def kfold(n: int, folds: int, seed: int) -> List[np.ndarray]:
    """
    Shuffled test-index sets of a k-fold split: disjoint, covering range(n), sizes differing by at most one.
    """
    if folds < 2 or folds > n:
        raise PreconditionError(f"cannot split {n} instances into {folds} folds")
    order = make_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(order, folds)]


def condition_grouping(condition: Condition, space: FeatureSpace, xs: Sequence[Instance], cfs: Sequence[CfResult],
                       cfg: BenchmarkConfig) -> Grouping:
    if condition == Condition.NONE:
        return Grouping.single(len(xs), {"strategy": "none"})
    if condition == Condition.CLUSTER_INSTANCES:
        return group_by_instances(space, xs, cfg.cluster_instances)
    try:
        return group_by_cf_directions(space, cfs, cfg.cluster_cfs)
    except InsufficientDataError as exc:
        logger.warning("Cluster sweep skipped, using one group", reason=str(exc))
        return Grouping.single(len(xs), {"strategy": "none", "reason": str(exc)})


def groups_with_noise(grouping: Grouping) -> List[Tuple[Tuple[int, ...], bool]]:
    """The groups of a grouping plus its noise as one extra flagged group."""
    groups = [(members, False) for members in grouping.groups]
    if grouping.noise:
        groups.append((grouping.noise, True))
    return groups


def solve_group(method: Method, members: Sequence[int], xs: Sequence[Instance], cfs: Sequence[CfResult],
                model: Classifier, cfg: BenchmarkConfig, fold_seed: int, group: int) -> MultiCfResult:
    """One multi-instance counterfactual for one group."""
    group_xs = [xs[i] for i in members]
    group_cfs = [cfs[i] for i in members]
    target = model.space.label_set[1]
    if method == Method.EA:
        ea = cfg.ea.model_copy(update={"seed": derive_seed(fold_seed, 2, group)})
        warm = [cf.delta for cf in group_cfs if cf.valid]
        return run_mu_plus_lambda(group_xs, model, target, ea, warm)
    return warren_max_coverage(group_cfs, group_xs, model, target, cfg.warren_max_candidates,
                               derive_seed(fold_seed, 3, group), cfg.ea.C)


def run_fold(fold: int, test: np.ndarray, space: FeatureSpace, data: LabeledData,
             cfg: BenchmarkConfig) -> Tuple[FoldSummary, List[GroupRecord]]:
    """Train, explain, group and solve one fold."""
    fold_seed = derive_seed(cfg.seed, fold)
    with bound_run_context(fold=fold):
        is_test = np.zeros(len(data.instances), dtype=bool)
        is_test[test] = True
        train = LabeledData(
            instances=tuple(x for x, t in zip(data.instances, is_test) if not t),
            labels=tuple(y for y, t in zip(data.labels, is_test) if not t),
        )
        try:
            model = train_model(space, train, cfg.model.model_copy(update={"seed": derive_seed(fold_seed, 0)}))
        except DegenerateTrainingError as exc:
            logger.warning("Fold skipped", reason=str(exc))
            return FoldSummary(fold=fold, seed=fold_seed, test_size=len(test), explained=0, skipped=True,
                               reason=str(exc)), []

        test_xs = [data.instances[i] for i in test]
        predicted = model.predict_index_codes(space.to_codes(test_xs))
        xs = [x for x, p in zip(test_xs, predicted) if p == 0]
        if not xs:
            logger.warning("Fold skipped", reason="no negatively predicted test instance")
            return FoldSummary(fold=fold, seed=fold_seed, test_size=len(test), explained=0, skipped=True,
                               reason="no negatively predicted test instance"), []

        template = cfg.cf.model_copy(update={"target": space.label_set[1], "seed": derive_seed(fold_seed, 1)})
        cfs = batch_cf(model, xs, template)

        records = []
        for condition in cfg.conditions:
            grouping = condition_grouping(condition, space, xs, cfs, cfg)
            for group, (members, is_noise) in enumerate(groups_with_noise(grouping)):
                for method in cfg.methods:
                    result = solve_group(method, members, xs, cfs, model, cfg, fold_seed, group)
                    records.append(GroupRecord(
                        fold=fold,
                        condition=condition,
                        method=method,
                        group=group,
                        size=len(members),
                        is_noise=is_noise,
                        correctness=result.correctness,
                        cost=cost_metric(result.delta, space),
                        psi_cost=result.cost,
                        members=tuple(int(i) for i in members),
                        delta=result.delta,
                    ))
        logger.info("Fold finished", explained=len(xs), records=len(records))
        return FoldSummary(fold=fold, seed=fold_seed, test_size=len(test), explained=len(xs)), records


def run_benchmark(cfg: BenchmarkConfig, threads: int = 1) -> EvalReport:
    """
    Run the cross-validated benchmark.

    Folds run in up to `threads` worker threads; every seed is derived from
    the master seed and results are reduced in fold order, so the report
    does not depend on the thread count.

    Args:
        cfg: Benchmark configuration
        threads: Worker threads for folds

    Returns:
        The report (records, aggregates and manifest)
    """
    started = time.perf_counter()
    space, data = load_data(cfg)
    shuffle_seed = derive_seed(cfg.seed, SHUFFLE_KEY)
    splits = kfold(len(data.instances), cfg.folds, shuffle_seed)
    logger.info("Benchmark started", name=cfg.name, instances=len(data.instances), folds=cfg.folds, threads=threads)

    def work(fold: int) -> Tuple[FoldSummary, List[GroupRecord]]:
        return run_fold(fold, splits[fold], space, data, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, range(cfg.folds)))
    else:
        outcomes = [work(fold) for fold in range(cfg.folds)]

    records = tuple(record for _, fold_records in outcomes for record in fold_records)
    manifest = RunManifest(
        master_seed=cfg.seed,
        shuffle_seed=shuffle_seed,
        folds=tuple(summary for summary, _ in outcomes),
        config=cfg.model_dump(mode="json", by_alias=True),
    )
    elapsed = time.perf_counter() - started
    report = EvalReport(records=records, aggregates=aggregate(records), manifest=manifest,
                        timings={"total_seconds": elapsed})
    logger.info("Benchmark finished", records=len(records), seconds=round(elapsed, 2))
    return report
