"""
Command-line entry point for the multi-instance counterfactual toolkit.

    python -m src.main <command> [options]

Commands: train, explain, group, multicf, bench, synth. Results go to files
under the output directory and a short JSON summary goes to stdout; logs go
to stderr. Runtime errors print one JSON line {"error": ..., "message": ...}
to stderr and exit with status 1; usage errors exit with status 2.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, ValidationError
from pydantic_core import to_json

from config.config import config
from src import __version__
from src.classifiers.base import ModelKind, TrainConfig
from src.classifiers.storage import load_model, save_model
from src.classifiers.training import train_model
from src.core.delta import CostKind
from src.explain.single import CfBatch, CfSolver, CfTemplate, explain_instances
from src.grouping.partition import Grouping
from src.grouping.strategies import ClusterParams, ClusterStrategy, group_instances
from src.harness.benchmark import groups_with_noise, load_benchmark_config, run_benchmark
from src.harness.datasets import load_dataset, load_instances, load_schema, schema_for_space, write_dataset
from src.harness.report import emit_report
from src.harness.synthetic import SyntheticLayout, SyntheticMode, make_synthetic
from src.multicf.evolution import EaConfig, GroupSolution, MultiCfDocument, run_mu_plus_lambda
from src.multicf.warren import warren_max_coverage
from src.utils.exceptions import MultiCfError
from src.utils.logging import bound_run_context, configure_logging, get_logger, new_run_id
from src.utils.models import FORMAT_VERSION, VersionedDocument, read_document, write_document
from src.utils.seeding import derive_seed

logger = get_logger(__name__)

VERBOSITY_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]


class ErrorLine(BaseModel):
    error: str
    message: str


class CliManifest(VersionedDocument):
    """Effective settings of one command invocation."""

    package_version: str = __version__
    command: str
    settings: Dict[str, Any]
    environment: Dict[str, Any]


def _output_dir(args: argparse.Namespace) -> Path:
    return Path(args.output_dir if args.output_dir is not None else config.output_dir)


def _seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else config.seed


def _threads(args: argparse.Namespace) -> int:
    return args.threads if args.threads is not None else config.threads


def _artifact(args: argparse.Namespace, default_name: str) -> Path:
    return Path(args.out) if getattr(args, "out", None) else _output_dir(args) / default_name


def _emit(summary: Dict[str, Any]) -> None:
    """Print a one-line JSON summary on stdout."""
    print(to_json(summary).decode("utf-8"))


def _write_manifest(args: argparse.Namespace, directory: Path) -> Path:
    settings = {key: value for key, value in sorted(vars(args).items()) if key not in ("handler", "output_dir")}
    settings.update(seed=_seed(args), threads=_threads(args))
    manifest = CliManifest(command=args.command, settings=settings, environment=config.as_dict())
    return write_document(directory / f"{args.command}-manifest.json", manifest)


def cmd_train(args: argparse.Namespace) -> Dict[str, Any]:
    space, data = load_dataset(args.data, load_schema(args.schema))
    cfg = TrainConfig(
        kind=args.kind,
        learning_rate=args.learning_rate,
        iterations=args.iterations,
        trees=args.trees,
        depth=args.depth,
        regularization=args.regularization,
        seed=_seed(args),
    )
    model = train_model(space, data, cfg)
    path = save_model(model, _artifact(args, "model.json"))
    return {"model": str(path), "kind": model.kind.value, "instances": len(data.instances)}


def cmd_explain(args: argparse.Namespace) -> Dict[str, Any]:
    model = load_model(args.model)
    space = model.space
    instances = load_instances(args.instances, space)
    target = space.label_set[space.label_index(args.target)]
    template = CfTemplate(
        target=target,
        cost_kind=args.cost_kind,
        C=args.C,
        solver=args.solver,
        budget=args.budget,
        population=args.population,
        offspring=args.offspring,
        seed=_seed(args),
    )
    results = explain_instances(model, instances, template, _threads(args))
    path = write_document(
        _artifact(args, "cfs.json"),
        CfBatch(space=space, target=target, instances=tuple(instances), results=tuple(results)),
    )
    for index, result in enumerate(results):
        logger.info("Counterfactual", index=index, valid=result.valid, cost=result.cost)
    return {
        "cfs": str(path),
        "valid": [result.valid for result in results],
        "cost": [result.cost for result in results],
    }


def cmd_group(args: argparse.Namespace) -> Dict[str, Any]:
    batch = read_document(args.cfs, CfBatch)
    params = ClusterParams(
        strategy=args.strategy,
        eps=args.eps,
        min_pts=args.min_pts,
        k_range=tuple(args.k_range),
        cost_subcluster=args.cost_subcluster,
        cost_eps=args.cost_eps,
        seed=_seed(args),
    )
    grouping = group_instances(batch.space, batch.instances, batch.results, params)
    path = write_document(_artifact(args, "grouping.json"), grouping)
    return {"grouping": str(path), "groups": [len(g) for g in grouping.groups], "noise": len(grouping.noise)}


def cmd_multicf(args: argparse.Namespace) -> Dict[str, Any]:
    model = load_model(args.model)
    batch = read_document(args.cfs, CfBatch)
    model.encoding.check_space(batch.space)
    if args.grouping:
        grouping = read_document(args.grouping, Grouping)
    else:
        grouping = Grouping.single(len(batch.instances), {"strategy": "none"})
    if grouping.size != len(batch.instances):
        raise MultiCfError(f"grouping covers {grouping.size} instances, counterfactual file has {len(batch.instances)}")

    ea = EaConfig(mu=args.mu, lambda_=args.lambda_, generations=args.generations, C=args.C,
                  cost_kind=args.cost_kind, patience=args.patience)
    pending = model.predict_index_codes(model.space.to_codes(batch.instances)) != model.space.label_index(batch.target)
    solutions = []
    for group, (members, is_noise) in enumerate(groups_with_noise(grouping)):
        members = tuple(i for i in members if pending[i])
        if not members:
            logger.info("Group already at the target", group=group, is_noise=is_noise)
            continue
        xs = [batch.instances[i] for i in members]
        cfs = [batch.results[i] for i in members]
        seed = derive_seed(_seed(args), group)
        if args.method == "warren":
            result = warren_max_coverage(cfs, xs, model, batch.target, args.max_candidates, seed, args.C)
        else:
            warm = [cf.delta for cf in cfs if cf.valid]
            result = run_mu_plus_lambda(xs, model, batch.target, ea.model_copy(update={"seed": seed}), warm)
        solutions.append(GroupSolution(group=group, members=members, is_noise=is_noise, result=result))
    document = MultiCfDocument(method=args.method, target=batch.target, solutions=tuple(solutions))
    path = write_document(_artifact(args, "multicf.json"), document)
    return {
        "multicf": str(path),
        "correctness": [s.result.correctness for s in solutions],
        "cost": [s.result.cost for s in solutions],
    }


def cmd_bench(args: argparse.Namespace) -> Dict[str, Any]:
    cfg = load_benchmark_config(args.config)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    report = run_benchmark(cfg, threads=_threads(args))
    directory = Path(args.output_dir) if args.output_dir is not None else Path(cfg.output_dir or config.output_dir)
    written = emit_report(report, directory)
    return {
        "output_dir": str(directory),
        "files": [path.name for path in written],
        "correctness": {f"{a.condition.value}/{a.method.value}": a.correctness_mean for a in report.aggregates},
        "cost": {f"{a.condition.value}/{a.method.value}": a.cost_mean for a in report.aggregates},
    }


def cmd_synth(args: argparse.Namespace) -> Dict[str, Any]:
    layout = SyntheticLayout(
        mode=args.mode,
        features=args.features,
        segments=args.segments,
        bundle_size=args.bundle_size,
        extra_categorical=args.extra_categorical,
    )
    space, data = make_synthetic(layout, args.n, _seed(args))
    directory = _output_dir(args)
    data_path = write_dataset(directory / f"{args.name}.csv", space, data)
    schema_path = write_document(directory / f"{args.name}.schema.json", schema_for_space(space, name=args.name))
    return {"data": str(data_path), "schema": str(schema_path), "instances": len(data.instances)}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Master seed (default: MICF_SEED)")
    common.add_argument("-v", "--verbosity", action="count", default=None,
                        help="Repeat for more log output (-v info, -vv debug)")
    common.add_argument("--output-dir", default=None, help="Directory for artifacts (default: MICF_OUTPUT_DIR)")
    common.add_argument("--threads", type=int, default=None, help="Worker threads (default: MICF_THREADS)")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-parser per command."""
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="micf",
        description="Cost-efficient multi-instance counterfactual explanations",
        parents=[common],
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} (format_version {FORMAT_VERSION})")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", parents=[common], help="Train a classifier on a CSV dataset")
    train.add_argument("--data", required=True, help="CSV file")
    train.add_argument("--schema", required=True, help="Dataset schema JSON")
    train.add_argument("--kind", type=ModelKind, choices=list(ModelKind), default=ModelKind.TREES)
    train.add_argument("--learning-rate", type=float, default=0.3)
    train.add_argument("--iterations", type=int, default=500, help="Gradient steps (linear)")
    train.add_argument("--trees", type=int, default=50, help="Boosting rounds (trees)")
    train.add_argument("--depth", type=int, default=3, help="Tree depth (trees)")
    train.add_argument("--regularization", type=float, default=1e-3)
    train.add_argument("--out", help="Model file (default: <output-dir>/model.json)")
    train.set_defaults(handler=cmd_train)

    explain = commands.add_parser("explain", parents=[common], help="Individual counterfactuals for CSV rows")
    explain.add_argument("--model", required=True, help="Model JSON written by train")
    explain.add_argument("--instances", "--instance", dest="instances", required=True,
                         help="CSV rows with the model's feature columns")
    explain.add_argument("--target", required=True, help="Requested label")
    explain.add_argument("--solver", type=CfSolver, choices=list(CfSolver), default=CfSolver.AUTO)
    explain.add_argument("--cost-kind", type=CostKind, choices=list(CostKind), default=CostKind.PSI)
    explain.add_argument("--C", type=float, default=0.01, help="Weight of the cost against the 0-1 loss")
    explain.add_argument("--budget", type=int, default=100, help="Search generations")
    explain.add_argument("--population", type=int, default=20)
    explain.add_argument("--offspring", type=int, default=40)
    explain.add_argument("--out", help="Counterfactual file (default: <output-dir>/cfs.json)")
    explain.set_defaults(handler=cmd_explain)

    group = commands.add_parser("group", parents=[common], help="Group instances by their counterfactuals")
    group.add_argument("--cfs", required=True, help="Counterfactual file written by explain")
    group.add_argument("--strategy", type=ClusterStrategy, choices=list(ClusterStrategy),
                       default=ClusterStrategy.DBSCAN_CF_DIRECTION)
    group.add_argument("--eps", type=float, default=0.1)
    group.add_argument("--min-pts", type=int, default=5)
    group.add_argument("--k-range", type=int, nargs="+", default=[2, 3, 4, 5, 6, 7, 8])
    group.add_argument("--cost-subcluster", action="store_true")
    group.add_argument("--cost-eps", type=float, default=0.1)
    group.add_argument("--out", help="Grouping file (default: <output-dir>/grouping.json)")
    group.set_defaults(handler=cmd_group)

    multicf = commands.add_parser("multicf", parents=[common], help="One counterfactual per group")
    multicf.add_argument("--model", required=True)
    multicf.add_argument("--cfs", required=True, help="Counterfactual file written by explain")
    multicf.add_argument("--grouping", help="Grouping file (default: one group)")
    multicf.add_argument("--method", choices=["ea", "warren"], default="ea")
    multicf.add_argument("--mu", type=int, default=50)
    multicf.add_argument("--lambda", dest="lambda_", type=int, default=100)
    multicf.add_argument("--generations", type=int, default=200)
    multicf.add_argument("--C", type=float, default=100.0, help="Weight of each unserved instance")
    multicf.add_argument("--cost-kind", type=CostKind, choices=list(CostKind), default=CostKind.PSI)
    multicf.add_argument("--patience", type=int, default=30)
    multicf.add_argument("--max-candidates", type=int, default=None, help="Candidate sample size (warren)")
    multicf.add_argument("--out", help="Result file (default: <output-dir>/multicf.json)")
    multicf.set_defaults(handler=cmd_multicf)

    bench = commands.add_parser("bench", parents=[common], help="Run a cross-validated benchmark")
    bench.add_argument("--config", required=True, help="Benchmark configuration JSON")
    bench.set_defaults(handler=cmd_bench)

    synth = commands.add_parser("synth", parents=[common], help="Write a synthetic dataset and its schema")
    synth.add_argument("--mode", type=SyntheticMode, choices=list(SyntheticMode), default=SyntheticMode.BUNDLES)
    synth.add_argument("--n", type=int, default=400)
    synth.add_argument("--features", type=int, default=2, help="Numeric features (blobs, xor)")
    synth.add_argument("--segments", type=int, default=4, help="Segments (bundles)")
    synth.add_argument("--bundle-size", type=int, default=2, help="Features per bundle (bundles)")
    synth.add_argument("--extra-categorical", type=int, default=0)
    synth.add_argument("--name", default="synthetic", help="Base name of the written files")
    synth.set_defaults(handler=cmd_synth)
    return parser


def _fail(exc: BaseException) -> int:
    """Print the one-line JSON error and return the runtime-error exit code."""
    line = ErrorLine(error=type(exc).__name__, message=str(exc).replace("\n", " "))
    print(line.model_dump_json(), file=sys.stderr)
    return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Returns:
        0 on success, 1 on a runtime error (argparse exits with 2 on usage errors)
    """
    args = build_parser().parse_args(argv)
    level = None if args.verbosity is None else VERBOSITY_LEVELS[min(args.verbosity, 2)]
    configure_logging(level)

    try:
        with bound_run_context(run_id=new_run_id(), command=args.command):
            summary = args.handler(args)
            if args.command != "bench":
                _write_manifest(args, _output_dir(args))
    except (MultiCfError, ValidationError, ValueError, OSError) as exc:
        logger.debug("Command failed", exc_info=exc)
        return _fail(exc)
    except Exception as exc:
        logger.error("Unhandled exception", exc_info=exc)
        return _fail(exc)

    _emit(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
