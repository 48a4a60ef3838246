#!/usr/bin/env python3
"""
Occlusion Robustness Toolkit - Command Line Interface

Generate shape data, train classifiers, attack single inputs, evaluate
robustness curves, survey critical sets and verify minimal occlusions.
"""

import argparse
import logging
import os
import sys
from datetime import datetime
from typing import List, Optional

import pandas as pd

from agents import (
    Goal,
    IsoAttacker,
    QueryCounter,
    brute_force_min_occlusion,
    critical_set_blackbox,
    critical_set_whitebox,
    exhaustive_verify,
    random_occlusion,
    salience_distribution,
    salience_frame,
)
from agents.query_model import OcclusionSubject
from config import Config, get_config
from engine import (
    Family,
    Network,
    TrainingConfig,
    default_point_spec,
    default_voxel_spec,
    load_weights,
    save_weights,
    to_model_input,
    train,
)
from harness import (
    ATTACK_KINDS,
    RunConfig,
    compare,
    critical_cardinality_survey,
    emit,
    emit_survey,
    evaluate,
    parity_check,
    save_records,
    write_manifest,
)
from harness.reporting import comparison_frame, comparison_text
from sources import OffDirectorySource, SyntheticSource
from tools import SHAPE_KINDS, PointCloud, load_dataset, save_cloud
from tools.dataset import sample_indices

logger = logging.getLogger("iso3d")


def setup_logging(level: str, output_dir: Optional[str] = None):
    """Stream handler plus, when an output directory is given, <output_dir>/run.log"""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        handlers.append(logging.FileHandler(os.path.join(output_dir, "run.log"), encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )


def run_directory(cfg: Config, args) -> str:
    name = args.run_name or f"{args.command}_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
    return os.path.join(cfg.output_dir, name)


def goal_kind(args, **kwargs) -> Goal:
    """Goal named by --goal/--target/--k"""
    if args.goal == "targeted":
        return Goal.targeted(args.target, **kwargs)
    if args.goal == "confidence_drop":
        return Goal.confidence_drop(args.k, **kwargs)
    return Goal.untargeted(**kwargs)


def build_goal(args, class_count: int, cfg: Config) -> Goal:
    seconds = args.budget_seconds if args.budget_seconds is not None else cfg.budget_seconds
    queries = args.budget_queries if args.budget_queries is not None else cfg.budget_queries
    if seconds is None and queries is None and not getattr(args, "max_restarts", None):
        seconds = cfg.budget_for(class_count)
    return goal_kind(
        args,
        budget_seconds=seconds,
        budget_queries=queries,
        minimize=getattr(args, "minimize", False),
        max_restarts=getattr(args, "max_restarts", None),
    )


def load_model(path: str) -> Network:
    spec, weights = load_weights(path)
    return Network(spec, weights)


def pick_input(network: Network, args):
    dataset = load_dataset(args.data)
    split = dataset.split(args.split)
    if not 0 <= args.index < len(split):
        raise IndexError(f"index {args.index} outside the {len(split)} {args.split} examples")
    example = split[args.index]
    return example, to_model_input(network.spec, example.input)


def save_survivor(result, path: str) -> str:
    subject_points = OcclusionSubject(result.survivor).coordinates()
    return save_cloud(PointCloud(subject_points), path)


def cmd_gen_data(args, cfg: Config, out: str) -> List[str]:
    if args.off_root:
        source = OffDirectorySource({"root": args.off_root, "n_points": cfg.n_points, "seed": cfg.seed})
    else:
        source = SyntheticSource({
            "kinds": args.kinds.split(",") if args.kinds else SHAPE_KINDS,
            "train_per_class": args.train_per_class,
            "test_per_class": args.test_per_class,
            "n_points": cfg.n_points,
            "noise_sd": cfg.noise_sd,
            "seed": cfg.seed,
        })
    print("🔧 Checking shape source...")
    if not source.check():
        raise ValueError("shape source is not usable")
    dataset = source.load()
    path = source.save_to_workspace(dataset, os.path.basename(args.out), folder=os.path.dirname(args.out) or ".")
    print(f"✅ Dataset saved to {path} ({len(dataset.train)} train / {len(dataset.test)} test, classes: {', '.join(dataset.classes)})")
    return [path]


def cmd_train(args, cfg: Config, out: str) -> List[str]:
    dataset = load_dataset(args.data)
    if args.family == Family.VOLUMETRIC.value:
        spec = default_voxel_spec(len(dataset.classes), cfg.resolution, tuple(dataset.classes))
    else:
        spec = default_point_spec(len(dataset.classes), args.latent_dim, tuple(dataset.classes))
    hyper = TrainingConfig(args.epochs, args.batch_size, args.learning_rate, args.momentum, cfg.seed)
    print(f"🧠 Training {spec.family.value} model for {hyper.epochs} epochs...")
    result = train(spec, dataset, hyper, progress=not args.quiet)
    model_path = save_weights(result.weights, args.out, spec)
    history_path = result.save_history(os.path.join(out, "history.csv"))
    last = result.history[-1] if result.history else None
    if last is not None:
        print(f"✅ Model saved to {model_path} (train {last.train_accuracy:.3f}, test {last.test_accuracy})")
    return [model_path, history_path]


def cmd_attack(args, cfg: Config, out: str) -> List[str]:
    network = load_model(args.model)
    _, x = pick_input(network, args)
    goal = build_goal(args, network.spec.class_count, cfg)
    counter = QueryCounter(network)
    if args.attack == "random":
        result = random_occlusion(counter, x, seed=cfg.seed)
    else:
        mode = "whitebox" if args.attack == "iso" else "blackbox"
        result = IsoAttacker(
            counter, mode=mode, score=args.score, tolerance=cfg.logit_tolerance,
            threshold=cfg.voxel_threshold, seed=cfg.seed,
        ).attack(x, goal)
    log_path = result.save_log(os.path.join(out, "attack_log.csv"))
    survivor_path = save_survivor(result, os.path.join(out, "survivor.pc3d"))
    status = "✅ Goal met" if result.goal_met else "⚠️ Goal not met"
    print(
        f"{status}: removed {result.occlusion_size}/{result.n_elements} elements, "
        f"class {result.predicted_before.label} -> {result.predicted_after.label}, "
        f"{result.queries} queries, {result.elapsed:.2f}s"
    )
    return [log_path, survivor_path]


def run_config(args, cfg: Config, attack: str) -> RunConfig:
    return RunConfig.from_config(
        cfg,
        model_path=args.model,
        dataset_path=args.data,
        attack=attack,
        goal=goal_kind(args),
        sample_size=args.sample_size,
        budget_seconds=args.budget_seconds,
        budget_queries=args.budget_queries,
        score=args.score,
    )


def cmd_eval(args, cfg: Config, out: str) -> List[str]:
    config = run_config(args, cfg, args.attack)
    print(f"📋 Evaluating {config.attack} on {config.sample_size} inputs...")
    curve = evaluate(config, progress=not args.quiet)
    suffix = "md" if args.format == "table-text" else "csv"
    paths = [
        emit([curve], os.path.join(out, f"curve.{suffix}"), args.format),
        save_records(curve, os.path.join(out, "records.csv")),
    ]
    accuracies = ", ".join(f"{c:g}%: {a:.3f}" for c, a in curve.accuracies().items())
    print(f"✅ {curve.n_evaluated} evaluated, {curve.n_errors} errors | {accuracies}")
    return paths


def cmd_compare(args, cfg: Config, out: str) -> List[str]:
    report = compare(run_config(args, cfg, args.attack_a), run_config(args, cfg, args.attack_b), progress=not args.quiet)
    paths = [
        emit([report.a, report.b], os.path.join(out, "curves.csv")),
        emit([report.a, report.b], os.path.join(out, "curves.md"), "table-text"),
        os.path.join(out, "comparison.csv"),
        os.path.join(out, "paired.csv"),
        os.path.join(out, "comparison.md"),
    ]
    comparison_frame(report).to_csv(paths[2], index=False)
    report.paired.to_csv(paths[3], index=False)
    with open(paths[4], "w", encoding="utf-8") as f:
        f.write(comparison_text(report))
    print(f"✅ Mean accuracy gap ({report.a.method} - {report.b.method}): {100 * report.mean_gap:.1f} points")
    return paths


def cmd_survey(args, cfg: Config, out: str) -> List[str]:
    network = load_model(args.model)
    dataset = load_dataset(args.data)
    size = min(args.sample_size or cfg.sample_size, len(dataset.test))
    sample = sample_indices(len(dataset.test), size, cfg.seed)
    survey = critical_cardinality_survey(
        network, dataset.test, sample, args.mode, cfg.logit_tolerance, cfg.voxel_threshold, progress=not args.quiet
    )
    paths = list(emit_survey(survey, out).values())
    if args.parity:
        report = parity_check(network, dataset.test, sample[: args.parity], seed=cfg.seed, progress=not args.quiet)
        paths.append(os.path.join(out, "parity.csv"))
        report.rows.to_csv(paths[-1], index=False)
        mark = "✅" if report.critical_sets_agree and report.removals_agree else "⚠️"
        print(f"{mark} Parity: critical sets {report.critical_sets_agree}, removals {report.removals_agree}")
    print(f"✅ Mean critical cardinality {survey.summary.get('mean', 0):.1f} over {len(sample)} inputs")
    return paths


def cmd_verify(args, cfg: Config, out: str) -> List[str]:
    network = load_model(args.model)
    _, x = pick_input(network, args)
    goal = build_goal(args, network.spec.class_count, cfg)
    goal = Goal(goal.kind, goal.target, goal.k, exhaustive=True)
    lines = []
    if args.method in ("exhaustive", "both"):
        result, certificate = exhaustive_verify(
            network, x, goal, threshold=cfg.voxel_threshold, oracle=args.method == "both"
        )
        lines.append(
            f"exhaustive: goal_met={result.goal_met} size={result.occlusion_size} witness={list(result.removed)} "
            f"nodes={certificate.nodes_expanded} orderings={certificate.orderings_covered} "
            f"optimal={certificate.optimal} exhausted={certificate.exhausted} "
            f"counterexample={certificate.counterexample}"
        )
    if args.method in ("brute-force", "both"):
        oracle = brute_force_min_occlusion(network, x, goal)
        lines.append(f"brute-force: size={oracle.min_size} witness={list(oracle.witness)} queries={oracle.queries}")
    path = os.path.join(out, "verify.txt")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    for line in lines:
        print(f"📋 {line}")
    return [path]


def cmd_export_salience(args, cfg: Config, out: str) -> List[str]:
    network = load_model(args.model)
    _, x = pick_input(network, args)
    trace = network.forward(x)
    if args.mode == "whitebox":
        cs = critical_set_whitebox(trace, x, cfg.voxel_threshold)
    else:
        cs = critical_set_blackbox(QueryCounter(network), x, trace, cfg.logit_tolerance, cfg.voxel_threshold)
    summary = salience_distribution(cs)
    frame = salience_frame(cs, x)
    frame["normalized"] = summary.pop("normalized")
    path = os.path.join(out, "salience.csv")
    frame.to_csv(path, index=False)
    summary_path = os.path.join(out, "salience_summary.csv")
    pd.DataFrame([summary]).to_csv(summary_path, index=False)
    print(
        f"✅ {summary['members']}/{summary['elements']} critical elements; "
        f"q1 {summary['q1']:.4f}, median {summary['median']:.4f}, q3 {summary['q3']:.4f}"
    )
    return [path, summary_path]


def cmd_config(args, cfg: Config, out: str) -> List[str]:
    cfg.print_status()
    if not cfg.validate():
        raise ValueError("configuration is invalid")
    print("✅ Configuration is valid")
    return []


HANDLERS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "attack": cmd_attack,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "survey": cmd_survey,
    "verify": cmd_verify,
    "export-salience": cmd_export_salience,
    "config": cmd_config,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iso3d", description="Occlusion robustness toolkit for 3D shape classifiers")
    parser.add_argument("--config", default="config.json", help="JSON config file")
    parser.add_argument("--output-dir", help="Parent directory for run outputs")
    parser.add_argument("--run-name", help="Run directory name (default: command and timestamp)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--log-level")
    parser.add_argument("--quiet", action="store_true", help="Hide progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_model(p, index: bool = False):
        p.add_argument("--model", required=True, help="Weight file (spec sidecar beside it)")
        p.add_argument("--data", required=True, help="Dataset directory")
        if index:
            p.add_argument("--index", type=int, default=0)
            p.add_argument("--split", default="test", choices=["train", "test"])

    def with_goal(p):
        p.add_argument("--goal", default="untargeted", choices=["untargeted", "targeted", "confidence_drop"])
        p.add_argument("--target", type=int)
        p.add_argument("--k", type=float)
        p.add_argument("--budget-seconds", type=float)
        p.add_argument("--budget-queries", type=int)

    p = sub.add_parser("gen-data", help="Write a synthetic or OFF-derived dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--kinds", help="Comma-separated shape kinds")
    p.add_argument("--train-per-class", type=int, default=200)
    p.add_argument("--test-per-class", type=int, default=50)
    p.add_argument("--n-points", type=int)
    p.add_argument("--noise-sd", type=float)
    p.add_argument("--off-root", help="ModelNet-style tree <root>/<class>/{train,test}/*.off")

    p = sub.add_parser("train", help="Train a classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="Weight file to write")
    p.add_argument("--family", default="point-set", choices=[f.value for f in Family])
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--latent-dim", type=int, default=64)
    p.add_argument("--resolution", type=int)

    p = sub.add_parser("attack", help="Attack one input and write its log and survivor")
    with_model(p, index=True)
    with_goal(p)
    p.add_argument("--attack", default="iso", choices=ATTACK_KINDS)
    p.add_argument("--score", default="count", choices=["count", "logit"])
    p.add_argument("--minimize", action="store_true")
    p.add_argument("--max-restarts", type=int)

    for name, help_text in (("eval", "Accuracy-vs-occlusion curve"), ("compare", "Paired comparison of two attacks")):
        p = sub.add_parser(name, help=help_text)
        with_model(p)
        with_goal(p)
        p.add_argument("--sample-size", type=int)
        p.add_argument("--checkpoints", help="Comma-separated occlusion percentages, e.g. 0,1,5,10")
        p.add_argument("--score", default="count", choices=["count", "logit"])
        if name == "eval":
            p.add_argument("--attack", default="iso", choices=ATTACK_KINDS)
            p.add_argument("--format", default="csv", choices=["csv", "table-text"])
        else:
            p.add_argument("--attack-a", default="iso", choices=ATTACK_KINDS)
            p.add_argument("--attack-b", default="random", choices=ATTACK_KINDS)

    p = sub.add_parser("survey", help="Critical-set cardinality histogram")
    with_model(p)
    p.add_argument("--sample-size", type=int)
    p.add_argument("--mode", default="whitebox", choices=["whitebox", "blackbox"])
    p.add_argument("--parity", type=int, default=0, help="Also compare white-box and black-box ISO on this many inputs")

    p = sub.add_parser("verify", help="Exhaustive and brute-force minimal occlusion")
    with_model(p, index=True)
    with_goal(p)
    p.add_argument("--method", default="both", choices=["exhaustive", "brute-force", "both"])

    p = sub.add_parser("export-salience", help="Per-element salience CSV")
    with_model(p, index=True)
    p.add_argument("--mode", default="whitebox", choices=["whitebox", "blackbox"])

    sub.add_parser("config", help="Show and validate configuration")
    return parser


def config_from_args(args) -> Config:
    overrides = {
        "OUTPUT_DIR": args.output_dir,
        "SEED": args.seed,
        "LOG_LEVEL": args.log_level,
        "N_POINTS": getattr(args, "n_points", None),
        "NOISE_SD": getattr(args, "noise_sd", None),
        "RESOLUTION": getattr(args, "resolution", None),
        "CHECKPOINTS": getattr(args, "checkpoints", None),
    }
    return get_config(args.config, overrides)


def main(argv: Optional[List[str]] = None):
    """Parse arguments, run one subcommand and write its manifest."""
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        out = run_directory(cfg, args)
        setup_logging(cfg.log_level, out if args.command != "config" else None)
        outputs = HANDLERS[args.command](args, cfg, out)
        if args.command != "config":
            settings = {**cfg.as_dict(), **{k: v for k, v in vars(args).items() if k != "command"}}
            manifest = write_manifest(out, args.command, settings, {"seed": cfg.seed}, outputs)
            print(f"📋 Manifest written to {manifest}")
    except Exception as e:
        logger.debug("Command failed", exc_info=True)
        print(f"❌ Error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
