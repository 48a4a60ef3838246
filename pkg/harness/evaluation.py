"""
Batch Robustness Evaluation

Attack a seeded sample of test inputs and turn each input's occlusion at
misclassification into accuracy-vs-occlusion curves. Each input's curve is a
step that drops once the occlusion fraction passes its break point; inputs
that never break stay correct at every checkpoint.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from agents.attack_log import AttackResult
from agents.baselines import random_occlusion
from agents.goals import Goal
from agents.iso_attacker import IsoAttacker
from agents.query_model import QueryCounter
from agents.salience import critical_set_blackbox, critical_set_whitebox
from engine.network import Network, to_model_input
from engine.weights import load_weights
from tools.dataset import Dataset, derive_seed, load_dataset, sample_indices
from tools.synthetic import LabeledExample
from .run_config import RunConfig, RunConfigError

logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "index", "label", "clean_prediction", "clean_correct", "n_elements", "goal_met", "broken",
    "final_prediction", "occlusion_size", "occlusion_fraction", "queries", "seconds", "error",
]


@dataclass
class RobustnessCurve:
    """Per-input records of one run plus the accuracy they imply at each checkpoint"""

    model: str
    dataset: str
    method: str
    checkpoints: Tuple[float, ...]
    records: pd.DataFrame

    @property
    def evaluated(self) -> pd.DataFrame:
        return self.records[self.records["error"] == ""]

    @property
    def n_evaluated(self) -> int:
        return len(self.evaluated)

    @property
    def n_errors(self) -> int:
        return len(self.records) - self.n_evaluated

    def accuracy_at(self, checkpoint: float) -> float:
        """Fraction of evaluated inputs still correct after checkpoint percent occlusion"""
        df = self.evaluated
        if df.empty:
            return 0.0
        survives = ~df["broken"] | (df["occlusion_size"] * 100.0 > checkpoint * df["n_elements"])
        return float((df["clean_correct"] & survives).mean())

    def accuracies(self) -> Dict[float, float]:
        return {c: self.accuracy_at(c) for c in self.checkpoints}

    @property
    def clean_accuracy(self) -> float:
        df = self.evaluated
        return float(df["clean_correct"].mean()) if not df.empty else 0.0

    def mean_over_correct(self, column: str) -> float:
        df = self.evaluated
        correct = df[df["clean_correct"]]
        return float(correct[column].mean()) if not correct.empty else 0.0


def _record(index: int, example: LabeledExample, clean, result: Optional[AttackResult], n: int, error: str = "") -> dict:
    # broken means the returned survivor is misclassified, whatever the goal asked for
    final = result.predicted_after.label if result is not None else -1
    broken = bool(result is not None and final != example.label)
    return {
        "index": index,
        "label": example.label,
        "clean_prediction": -1 if clean is None else clean.label,
        "clean_correct": bool(clean is not None and clean.label == example.label),
        "n_elements": n,
        "goal_met": bool(result is not None and result.goal_met),
        "broken": broken,
        "final_prediction": final,
        "occlusion_size": result.occlusion_size if broken else -1,
        "occlusion_fraction": result.occlusion_fraction if broken else float("nan"),
        "queries": result.queries if result is not None else 0,
        "seconds": result.elapsed if result is not None else 0.0,
        "error": error,
    }


def attack_input(network: Network, example: LabeledExample, index: int, config: RunConfig, goal: Goal) -> dict:
    """Clean prediction plus the configured attack on one input; errors become part of the record"""
    clean, n = None, 0
    try:
        x = to_model_input(network.spec, example.input)
        n = len(x)
        counter = QueryCounter(network)
        clean = network.predict(x)
        if clean.label != example.label:
            return _record(index, example, clean, None, n)
        seed = derive_seed(config.seed, index)
        if config.attack == "random":
            result = random_occlusion(counter, x, seed=seed)
        else:
            mode = "whitebox" if config.attack == "iso" else "blackbox"
            attacker = IsoAttacker(
                counter, mode=mode, score=config.score, tolerance=config.tolerance,
                threshold=config.threshold, seed=seed,
            )
            result = attacker.attack(x, goal)
        return _record(index, example, clean, result, n)
    except Exception as e:  # recorded, never dropped
        logger.warning("Attack on input %d failed: %s", index, e)
        return _record(index, example, clean, None, n, error=f"{type(e).__name__}: {e}")


_WORKER_NETWORK: Optional[Network] = None


def _init_worker(network: Network):
    global _WORKER_NETWORK
    _WORKER_NETWORK = network


def _attack_in_worker(args) -> dict:
    example, index, config, goal = args
    return attack_input(_WORKER_NETWORK, example, index, config, goal)


def load_run_inputs(config: RunConfig) -> Tuple[Network, Dataset]:
    spec, weights = load_weights(config.model_path)
    return Network(spec, weights), load_dataset(config.dataset_path)


def evaluate(
    config: RunConfig,
    network: Optional[Network] = None,
    dataset: Optional[Dataset] = None,
    progress: bool = True,
) -> RobustnessCurve:
    """
    Run the configured attack over a seeded sample of the test split.

    Args:
        config: Run configuration
        network: Model to attack; loaded from config.model_path when omitted
        dataset: Data; loaded from config.dataset_path when omitted
        progress: Show a progress bar

    Returns:
        RobustnessCurve with one record per sampled input, ordered by input index
    """
    if network is None or dataset is None:
        loaded_network, loaded_dataset = load_run_inputs(config)
        network = network or loaded_network
        dataset = dataset or loaded_dataset
    if config.sample_size > len(dataset.test):
        raise RunConfigError(f"sample_size {config.sample_size} exceeds the {len(dataset.test)} test inputs")
    if network.spec.class_count < len(dataset.classes):
        raise RunConfigError("dataset has more classes than the model predicts")

    indices = sample_indices(len(dataset.test), config.sample_size, config.seed)
    goal = config.attack_goal(network.spec.class_count)
    tasks = [(dataset.test[i], int(i), config, goal) for i in indices]
    logger.info("Evaluating %s on %d inputs with goal %s", config.attack, len(tasks), goal.describe())

    if config.workers > 1:
        with ProcessPoolExecutor(config.workers, initializer=_init_worker, initargs=(network,)) as pool:
            rows = list(tqdm(pool.map(_attack_in_worker, tasks), total=len(tasks), desc=config.attack, disable=not progress))
    else:
        rows = [attack_input(network, *task) for task in tqdm(tasks, desc=config.attack, disable=not progress)]

    records = pd.DataFrame(rows, columns=RECORD_COLUMNS)
    return RobustnessCurve(
        model=os.path.basename(config.model_path),
        dataset=os.path.basename(os.path.normpath(config.dataset_path)),
        method=config.method,
        checkpoints=config.checkpoints,
        records=records,
    )


@dataclass
class ComparisonReport:
    """Paired comparison of two runs over the same sample"""

    a: RobustnessCurve
    b: RobustnessCurve
    deltas: Dict[float, float]
    paired: pd.DataFrame

    @property
    def mean_gap(self) -> float:
        return float(np.mean(list(self.deltas.values()))) if self.deltas else 0.0


def compare_curves(a: RobustnessCurve, b: RobustnessCurve) -> ComparisonReport:
    """Accuracy deltas (a minus b) per checkpoint and per-input paired occlusion sizes"""
    if a.checkpoints != b.checkpoints:
        raise RunConfigError("runs use different checkpoints")
    deltas = {c: a.accuracy_at(c) - b.accuracy_at(c) for c in a.checkpoints}
    left = a.records[["index", "clean_correct", "occlusion_size"]]
    right = b.records[["index", "occlusion_size"]]
    paired = left.merge(right, on="index", suffixes=("_a", "_b"))
    return ComparisonReport(a, b, deltas, paired)


def compare(
    config_a: RunConfig,
    config_b: RunConfig,
    network: Optional[Network] = None,
    dataset: Optional[Dataset] = None,
    progress: bool = True,
) -> ComparisonReport:
    """Run two configurations on the same model, dataset, sample and seed and pair them"""
    for name in ("model_path", "dataset_path", "sample_size", "seed", "checkpoints"):
        if getattr(config_a, name) != getattr(config_b, name):
            raise RunConfigError(f"compared runs differ in {name}")
    if network is None or dataset is None:
        network, dataset = load_run_inputs(config_a)
    a = evaluate(config_a, network, dataset, progress)
    b = evaluate(config_b, network, dataset, progress)
    return compare_curves(a, b)


@dataclass
class CardinalitySurvey:
    per_input: pd.DataFrame
    histogram: pd.DataFrame
    summary: Dict[str, float] = field(default_factory=dict)


def critical_cardinality_survey(
    network: Network,
    examples: Sequence[LabeledExample],
    sample: Optional[Sequence[int]] = None,
    mode: str = "whitebox",
    tolerance: float = 1e-6,
    threshold: float = 0.25,
    progress: bool = True,
) -> CardinalitySurvey:
    """
    Critical-set cardinality of every sampled input.

    Returns:
        CardinalitySurvey with per-input rows (index, n_elements, cardinality,
        fraction), a (bin, count) histogram and mean/quartile summary
    """
    indices = list(range(len(examples))) if sample is None else [int(i) for i in sample]
    counter = QueryCounter(network)
    rows = []
    for i in tqdm(indices, desc="survey", disable=not progress):
        x = to_model_input(network.spec, examples[i].input)
        trace = network.forward(x)
        if mode == "whitebox":
            cs = critical_set_whitebox(trace, x, threshold)
        else:
            cs = critical_set_blackbox(counter, x, trace, tolerance, threshold)
        rows.append({"index": i, "n_elements": len(x), "cardinality": len(cs), "fraction": len(cs) / len(x)})

    per_input = pd.DataFrame(rows, columns=["index", "n_elements", "cardinality", "fraction"])
    histogram = (
        per_input["cardinality"].value_counts().sort_index().rename_axis("bin").reset_index(name="count")
    )
    summary: Dict[str, float] = {}
    if not per_input.empty:
        q1, median, q3 = per_input["cardinality"].quantile([0.25, 0.5, 0.75])
        summary = {
            "inputs": float(len(per_input)),
            "mean": float(per_input["cardinality"].mean()),
            "q1": float(q1),
            "median": float(median),
            "q3": float(q3),
            "mean_fraction": float(per_input["fraction"].mean()),
        }
    return CardinalitySurvey(per_input, histogram, summary)


@dataclass
class ParityReport:
    """White-box vs black-box agreement on a sample"""

    rows: pd.DataFrame

    @property
    def critical_sets_agree(self) -> bool:
        return bool(self.rows["critical_set_equal"].all())

    @property
    def removals_agree(self) -> bool:
        return bool(self.rows["removals_equal"].all())


def parity_check(
    network: Network,
    examples: Sequence[LabeledExample],
    sample: Optional[Sequence[int]] = None,
    goal: Optional[Goal] = None,
    seed: int = 0,
    progress: bool = True,
) -> ParityReport:
    """
    Compare white-box and black-box critical sets and ISO removal sequences.

    Black-box runs use tolerance 0 and white-box runs the logit saliency
    score, so the two modes see the same members ranked the same way. The
    goal should bound runs by restarts, not by time or queries. Point-set
    models only: volumetric members are a top fraction in either mode.
    """
    goal = goal or Goal(max_restarts=4)
    indices = list(range(len(examples))) if sample is None else [int(i) for i in sample]
    if not network.validate_nonzero_head():
        logger.warning("Model head has zero weights; black-box critical sets may differ")

    rows = []
    for i in tqdm(indices, desc="parity", disable=not progress):
        x = to_model_input(network.spec, examples[i].input)
        trace = network.forward(x)
        white = critical_set_whitebox(trace, x)
        black = critical_set_blackbox(QueryCounter(network), x, trace, tolerance=0.0)
        white_run = IsoAttacker(network, "whitebox", score="logit", seed=seed).attack(x, goal)
        black_run = IsoAttacker(network, "blackbox", tolerance=0.0, seed=seed).attack(x, goal)
        rows.append({
            "index": i,
            "critical_set_equal": white.member_set() == black.member_set(),
            "removals_equal": [(e.action, e.element_index) for e in white_run.log]
            == [(e.action, e.element_index) for e in black_run.log],
            "whitebox_queries": white_run.queries,
            "blackbox_queries": black_run.queries,
            "whitebox_seconds": white_run.elapsed,
            "blackbox_seconds": black_run.elapsed,
        })
    return ParityReport(pd.DataFrame(rows))
