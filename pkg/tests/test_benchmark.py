"""
Tests for the cross-validated benchmark, including the directional
acceptance runs on the synthetic bundles dataset.
"""
import json
from pathlib import Path

import pytest

import src.harness.benchmark as benchmark
from src.classifiers.base import ModelKind, TrainConfig
from src.core.delta import Delta
from src.explain.single import CfResult, CfSolver
from src.grouping.strategies import ClusterParams, ClusterStrategy
from src.harness.benchmark import (
    BenchmarkConfig,
    SyntheticSource,
    condition_grouping,
    load_benchmark_config,
    run_benchmark,
)
from src.harness.report import Condition, Method, emit_report
from src.harness.synthetic import SyntheticLayout, SyntheticMode
from src.multicf.evolution import EaConfig
from src.utils.exceptions import DegenerateTrainingError
from src.utils.models import write_document

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config" / "benchmarks"


@pytest.fixture
def small_config():
    return BenchmarkConfig(
        name="blobs",
        synthetic=SyntheticSource(layout=SyntheticLayout(mode=SyntheticMode.BLOBS), n=60, seed=2),
        model=TrainConfig(kind=ModelKind.LINEAR),
        ea=EaConfig(mu=10, lambda_=20, generations=10),
        folds=2,
        seed=5,
    )


def read_tree(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).iterdir())}


def cell(report, condition, method):
    (entry,) = [a for a in report.aggregates if a.condition == condition and a.method == method]
    return entry


def test_small_benchmark(small_config):
    """Two folds cover every condition and method and partition the explained instances."""
    report = run_benchmark(small_config)
    assert len(report.manifest.folds) == 2
    assert {(a.condition, a.method) for a in report.aggregates} == {(c, m) for c in Condition for m in Method}
    for fold in report.manifest.folds:
        assert not fold.skipped
        for condition in Condition:
            members = sorted(i for r in report.records
                             if r.fold == fold.fold and r.condition == condition and r.method == Method.EA
                             for i in r.members)
            assert members == list(range(fold.explained))
    assert "timings" not in report.to_json()


def test_threads_do_not_change_artifacts(small_config, tmp_path):
    """Report files are byte-identical for one and two worker threads."""
    emit_report(run_benchmark(small_config, threads=1), tmp_path / "one")
    emit_report(run_benchmark(small_config, threads=2), tmp_path / "two")
    assert read_tree(tmp_path / "one") == read_tree(tmp_path / "two")


def test_seed_changes_results(small_config):
    """Another master seed shuffles the folds differently."""
    first = run_benchmark(small_config)
    second = run_benchmark(small_config.model_copy(update={"seed": 6}))
    assert first.manifest.shuffle_seed != second.manifest.shuffle_seed


def test_degenerate_fold_is_skipped(small_config, monkeypatch):
    """A fold whose model cannot be trained is skipped and recorded in the manifest."""
    original = benchmark.train_model
    calls = []

    def flaky(space, data, cfg):
        calls.append(cfg.seed)
        if len(calls) == 1:
            raise DegenerateTrainingError("only one label in the training split")
        return original(space, data, cfg)

    monkeypatch.setattr(benchmark, "train_model", flaky)
    report = run_benchmark(small_config)
    skipped = [f for f in report.manifest.folds if f.skipped]
    assert len(skipped) == 1
    assert "one label" in skipped[0].reason
    assert {r.fold for r in report.records} == {1 - skipped[0].fold}
    assert all(a.folds == 1 for a in report.aggregates)


def test_config_paths_resolve_against_file(tmp_path):
    """Dataset paths in a configuration file are resolved relative to that file."""
    cfg = load_benchmark_config(CONFIG_DIR / "law_school.json")
    assert Path(cfg.dataset.data).is_absolute()
    assert Path(cfg.dataset.schema_path).resolve() == (CONFIG_DIR.parent / "schemas" / "law_school.json").resolve()

    doc = json.loads((CONFIG_DIR / "synthetic_bundles.json").read_text())
    assert load_benchmark_config(CONFIG_DIR / "synthetic_bundles.json").ea.lambda_ == doc["ea"]["lambda"]


def test_config_needs_exactly_one_source(small_config, tmp_path):
    """A configuration needs a dataset or a synthetic source and survives a file round trip."""
    with pytest.raises(ValueError):
        BenchmarkConfig(name="none")
    path = write_document(tmp_path / "bench.json", small_config)
    assert load_benchmark_config(path) == small_config


@pytest.fixture(scope="module")
def bundles_report():
    return run_benchmark(load_benchmark_config(CONFIG_DIR / "synthetic_bundles.json"), threads=4)


@pytest.mark.slow
def test_bundles_metrics_are_in_range(bundles_report):
    """No fold is skipped and every metric lies in [0, 1]."""
    assert not any(f.skipped for f in bundles_report.manifest.folds)
    for entry in bundles_report.aggregates:
        assert entry.folds == 5
        assert 0.0 <= entry.correctness_mean <= 1.0
        assert 0.0 <= entry.cost_mean <= 1.0


@pytest.mark.slow
def test_bundles_ea_serves_cf_clusters(bundles_report):
    """The search serves at least 95% of the instances when groups follow counterfactual directions."""
    assert cell(bundles_report, Condition.CLUSTER_CFS, Method.EA).correctness_mean >= 0.95


@pytest.mark.slow
def test_bundles_ea_beats_max_coverage(bundles_report):
    """The search is at least as correct as the max-coverage baseline under every condition."""
    for condition in Condition:
        ea = cell(bundles_report, condition, Method.EA)
        warren = cell(bundles_report, condition, Method.WARREN)
        assert warren.correctness_mean <= ea.correctness_mean


@pytest.mark.slow
def test_bundles_cf_clusters_versus_instance_clusters(bundles_report):
    """Grouping by counterfactual direction is within 0.02 of grouping by instance position, or better."""
    cfs = cell(bundles_report, Condition.CLUSTER_CFS, Method.EA)
    instances = cell(bundles_report, Condition.CLUSTER_INSTANCES, Method.EA)
    assert cfs.correctness_mean >= instances.correctness_mean - 0.02


@pytest.mark.slow
def test_bundles_cf_clusters_are_cheaper(bundles_report):
    """Direction clusters lower the cost metric by at least 0.05 against one group of everything."""
    cfs = cell(bundles_report, Condition.CLUSTER_CFS, Method.EA)
    none = cell(bundles_report, Condition.NONE, Method.EA)
    assert cfs.cost_mean <= none.cost_mean - 0.05


@pytest.mark.slow
def test_bundles_artifacts_are_reproducible(bundles_report, tmp_path):
    """Rerunning the bundles benchmark writes identical report files."""
    cfg = load_benchmark_config(CONFIG_DIR / "synthetic_bundles.json")
    emit_report(bundles_report, tmp_path / "four")
    emit_report(run_benchmark(cfg, threads=1), tmp_path / "one")
    emit_report(run_benchmark(cfg, threads=8), tmp_path / "eight")
    assert read_tree(tmp_path / "one") == read_tree(tmp_path / "eight") == read_tree(tmp_path / "four")


def test_kmedoids_without_enough_cfs_uses_one_group(small_config, plane_space):
    """With fewer than three counterfactuals the k-medoids sweep is skipped for a single group."""
    cfg = small_config.model_copy(update={"cluster_cfs": ClusterParams(strategy=ClusterStrategy.KMEDOIDS_CF_DIRECTION)})
    cfs = [CfResult(delta=Delta.of(1.0, None), achieved=1, cost=2.0, valid=True, solver=CfSolver.SEARCH)] * 2
    grouping = condition_grouping(Condition.CLUSTER_CFS, plane_space, [None, None], cfs, cfg)
    assert grouping.groups == ((0, 1),)


def test_kmedoids_with_five_cfs_runs_the_sweep(small_config, plane_space):
    """A sparse fold sweeps only the cluster counts its counterfactuals allow."""
    cfg = small_config.model_copy(update={"cluster_cfs": ClusterParams(strategy=ClusterStrategy.KMEDOIDS_CF_DIRECTION)})
    deltas = [Delta.of(1.0, 0.1), Delta.of(2.0, 0.0), Delta.of(1.5, -0.1), Delta.of(0.0, 1.0), Delta.of(0.1, 2.0)]
    cfs = [CfResult(delta=d, achieved=1, cost=1.0, valid=True, solver=CfSolver.SEARCH) for d in deltas]
    grouping = condition_grouping(Condition.CLUSTER_CFS, plane_space, [None] * 5, cfs, cfg)
    assert grouping.provenance["k_used"] == [2, 3, 4]
    assert sorted(i for members in grouping.groups for i in members) + list(grouping.noise) == list(range(5))


@pytest.mark.parametrize("method", list(Method))
def test_no_clustering_equals_one_inclusive_cluster(small_config, method):
    """Solving all instances as one group gives the same records whether or not a clustering produced it."""
    inclusive = ClusterParams(strategy=ClusterStrategy.DBSCAN_INSTANCES, eps=1e6, min_pts=1)
    cfg = small_config.model_copy(update={
        "methods": (method,),
        "conditions": (Condition.NONE, Condition.CLUSTER_INSTANCES),
        "cluster_instances": inclusive,
    })
    report = run_benchmark(cfg)
    unclustered = [r for r in report.records if r.condition == Condition.NONE]
    clustered = [r for r in report.records if r.condition == Condition.CLUSTER_INSTANCES]
    assert len(unclustered) == len(clustered) > 0
    for a, b in zip(unclustered, clustered):
        assert (a.fold, a.members, a.correctness, a.cost, a.psi_cost, a.delta) == \
            (b.fold, b.members, b.correctness, b.cost, b.psi_cost, b.delta)
    assert cell(report, Condition.NONE, method).correctness_mean == \
        cell(report, Condition.CLUSTER_INSTANCES, method).correctness_mean
