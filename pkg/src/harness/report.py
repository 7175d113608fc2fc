"""
Benchmark results, their aggregation over folds and the report files.

Files written by emit_report:
    results.csv      one raw row per (fold, condition, method, group)
    summary.csv      aggregates per (condition, method), unrounded
    correctness.md   methods x conditions, "mean ± variance" rounded to two decimals
    cost.md          same layout for the cost metric
    groups.json      per-group records including the delta and member indices
    manifest.json    versions, effective configuration and every derived seed
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import Field

from src import __version__
from src.core.delta import Delta
from src.utils.logging import get_logger
from src.utils.models import FORMAT_VERSION, FrozenModel, VersionedDocument, write_document

logger = get_logger(__name__)


class Condition(str, Enum):
    """Enum for grouping conditions of the benchmark."""
    NONE = "none"
    CLUSTER_INSTANCES = "cluster-instances"
    CLUSTER_CFS = "cluster-cfs"


class Method(str, Enum):
    """Enum for multi-instance counterfactual methods."""
    EA = "ea"
    WARREN = "warren"


CONDITION_TITLES = {
    Condition.NONE: "No Clustering",
    Condition.CLUSTER_INSTANCES: "Clustering Instances",
    Condition.CLUSTER_CFS: "Clustering CFs",
}

METHOD_TITLES = {
    Method.EA: "Evolutionary",
    Method.WARREN: "Max coverage",
}


class GroupRecord(FrozenModel):
    """Result of one method on one group."""

    fold: int
    condition: Condition
    method: Method
    group: int
    size: int = Field(..., ge=1)
    is_noise: bool = False
    correctness: float = Field(..., ge=0.0, le=1.0)
    cost: float = Field(..., ge=0.0, le=1.0, description="Share of changed features")
    psi_cost: float = Field(..., ge=0.0)
    members: Tuple[int, ...] = ()
    delta: Delta


class Aggregate(FrozenModel):
    """Mean and variance over folds of the per-fold values of one (condition, method)."""

    condition: Condition
    method: Method
    folds: int
    correctness_mean: float
    correctness_var: float
    cost_mean: float
    cost_var: float
    correctness_unweighted_mean: float
    correctness_unweighted_var: float
    cost_weighted_mean: float
    cost_weighted_var: float


class FoldSummary(FrozenModel):
    fold: int
    seed: int
    test_size: int
    explained: int = Field(..., description="Test instances predicted negative")
    skipped: bool = False
    reason: str = ""


class RunManifest(VersionedDocument):
    """Everything needed to reproduce a run."""

    package_version: str = __version__
    master_seed: int
    shuffle_seed: int
    folds: Tuple[FoldSummary, ...]
    config: Dict[str, Any]


class EvalReport(VersionedDocument):
    """All group records of a benchmark run plus their aggregates."""

    records: Tuple[GroupRecord, ...]
    aggregates: Tuple[Aggregate, ...]
    manifest: RunManifest
    timings: Dict[str, float] = Field(default_factory=dict, exclude=True)


def _per_fold(records: Sequence[GroupRecord]) -> Tuple[float, float, float, float]:
    """(pooled correctness, unweighted correctness, unweighted cost, weighted cost) of one fold."""
    sizes = np.array([r.size for r in records], dtype=float)
    correctness = np.array([r.correctness for r in records])
    cost = np.array([r.cost for r in records])
    return (
        float((sizes * correctness).sum() / sizes.sum()),
        float(correctness.mean()),
        float(cost.mean()),
        float((sizes * cost).sum() / sizes.sum()),
    )


def aggregate(records: Sequence[GroupRecord]) -> Tuple[Aggregate, ...]:
    """
    Aggregate group records per (condition, method).

    Within a fold, correctness is pooled with group-size weights and cost is
    the plain mean over groups (both alternatives are kept too). Means and
    population variances are then taken over folds.
    """
    keys = sorted({(r.condition, r.method) for r in records},
                  key=lambda key: (list(Condition).index(key[0]), list(Method).index(key[1])))
    aggregates = []
    for condition, method in keys:
        selected = [r for r in records if r.condition == condition and r.method == method]
        folds = sorted({r.fold for r in selected})
        values = np.array([_per_fold([r for r in selected if r.fold == fold]) for fold in folds])
        means = values.mean(axis=0)
        variances = values.var(axis=0)
        aggregates.append(Aggregate(
            condition=condition,
            method=method,
            folds=len(folds),
            correctness_mean=float(means[0]),
            correctness_var=float(variances[0]),
            cost_mean=float(means[2]),
            cost_var=float(variances[2]),
            correctness_unweighted_mean=float(means[1]),
            correctness_unweighted_var=float(variances[1]),
            cost_weighted_mean=float(means[3]),
            cost_weighted_var=float(variances[3]),
        ))
    return tuple(aggregates)


def format_cell(mean: float, variance: float) -> str:
    """Table cell "mean ± variance", both rounded to two decimals (0.978, 0.0012 -> "0.98 ± 0.0")."""
    return f"{round(mean, 2)} ± {round(variance, 2)}"


def markdown_table(report: EvalReport, metric: str) -> str:
    """Methods as rows, conditions as columns."""
    conditions = [c for c in Condition if any(a.condition == c for a in report.aggregates)]
    methods = [m for m in Method if any(a.method == m for a in report.aggregates)]
    cells = {(a.condition, a.method): a for a in report.aggregates}
    lines = [
        "| Method | " + " | ".join(CONDITION_TITLES[c] for c in conditions) + " |",
        "|---|" + "---|" * len(conditions),
    ]
    for method in methods:
        row = []
        for condition in conditions:
            entry = cells.get((condition, method))
            if entry is None:
                row.append("-")
            else:
                row.append(format_cell(getattr(entry, f"{metric}_mean"), getattr(entry, f"{metric}_var")))
        lines.append(f"| {METHOD_TITLES[method]} | " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


class GroupDump(VersionedDocument):
    records: Tuple[GroupRecord, ...]


def records_frame(records: Sequence[GroupRecord]) -> pd.DataFrame:
    columns = ["fold", "condition", "method", "group", "size", "is_noise", "correctness", "cost", "psi_cost"]
    rows = [[getattr(r, c).value if isinstance(getattr(r, c), Enum) else getattr(r, c) for c in columns]
            for r in records]
    return pd.DataFrame(rows, columns=columns)


def aggregates_frame(aggregates: Sequence[Aggregate]) -> pd.DataFrame:
    rows = [a.model_dump(mode="json") for a in aggregates]
    return pd.DataFrame(rows, columns=list(Aggregate.model_fields))


def emit_report(report: EvalReport, output_dir: Union[str, Path], formats: Sequence[str] = ("csv", "markdown")) -> List[Path]:
    """
    Write the report files.

    Args:
        report: The benchmark report
        output_dir: Destination directory (created if missing)
        formats: Any of "csv" (raw tables) and "markdown" (rounded tables);
            groups.json and manifest.json are always written

    Returns:
        The written paths
    """
    target = Path(output_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        records_frame(report.records).to_csv(target / "results.csv", index=False)
        aggregates_frame(report.aggregates).to_csv(target / "summary.csv", index=False)
        written += [target / "results.csv", target / "summary.csv"]
    if "markdown" in formats:
        for metric in ("correctness", "cost"):
            path = target / f"{metric}.md"
            path.write_text(markdown_table(report, metric), encoding="utf-8")
            written.append(path)
    written.append(write_document(target / "groups.json", GroupDump(records=report.records)))
    written.append(write_document(target / "manifest.json", report.manifest))
    logger.info("Report written", directory=str(target), files=len(written), format_version=FORMAT_VERSION)
    return written
