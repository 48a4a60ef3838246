"""
Mini-batch SGD training with momentum.

Gradients are computed one example at a time and averaged per batch. A
single seeded generator drives initialization and shuffling, so a fixed seed
replays bit-identically on one machine.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from tools.dataset import Dataset
from tools.synthetic import LabeledExample
from .network import Network, ShapeInput, to_model_input
from .spec import ModelSpec
from .weights import Weights, init_weights

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "loss", "train_accuracy", "test_accuracy"]


class TrainingDivergedError(RuntimeError):
    """Loss or weights became non-finite"""

    def __init__(self, epoch: int, message: str = "non-finite loss"):
        self.epoch = epoch
        super().__init__(f"training diverged in epoch {epoch}: {message}")


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    train_accuracy: float
    test_accuracy: Optional[float]


@dataclass
class TrainingResult:
    weights: Weights
    history: List[EpochRecord] = field(default_factory=list)

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(r) for r in self.history], columns=HISTORY_COLUMNS)

    def save_history(self, path: str) -> str:
        self.history_frame().to_csv(path, index=False)
        return path


def accuracy(network: Network, inputs: Sequence[ShapeInput], labels: Sequence[int]) -> float:
    """Fraction of inputs whose predicted class equals the label"""
    if not inputs:
        return 0.0
    hits = sum(network.predict(x).label == y for x, y in zip(inputs, labels))
    return hits / len(inputs)


def _prepare(spec: ModelSpec, examples: Sequence[LabeledExample]):
    return [to_model_input(spec, e.input) for e in examples], [e.label for e in examples]


def train(
    spec: ModelSpec,
    dataset: Dataset,
    hyper: Optional[TrainingConfig] = None,
    initial: Optional[Weights] = None,
    progress: bool = True,
) -> TrainingResult:
    """
    Minimize cross-entropy over the training split.

    Args:
        spec: Architecture to train
        dataset: Labeled data; the test split is scored after every epoch when present
        hyper: Hyperparameters (defaults to TrainingConfig())
        initial: Starting weights; fresh fan-in initialization when omitted
        progress: Show a progress bar over epochs

    Returns:
        TrainingResult with final weights and per-epoch history

    Raises:
        TrainingDivergedError: loss or weights become non-finite
    """
    hyper = hyper or TrainingConfig()
    if not dataset.train:
        raise ValueError("training split is empty")
    if any(not 0 <= e.label < spec.class_count for e in dataset.train):
        raise ValueError("training labels exceed the model's class count")

    rng = np.random.default_rng(hyper.seed)
    start = initial if initial is not None else init_weights(spec, seed=int(rng.integers(2**31)))
    params: Dict[str, np.ndarray] = start.to_dict()
    velocity = {name: np.zeros_like(value) for name, value in params.items()}

    train_inputs, train_labels = _prepare(spec, dataset.train)
    test_inputs, test_labels = _prepare(spec, dataset.test)
    result = TrainingResult(weights=start)

    epochs = tqdm(range(1, hyper.epochs + 1), desc="train", unit="epoch", disable=not progress)
    for epoch in epochs:
        order = rng.permutation(len(train_inputs))
        total_loss, hits = 0.0, 0
        for offset in range(0, len(order), hyper.batch_size):
            batch = order[offset:offset + hyper.batch_size]
            network = Network(spec, Weights(params))
            summed = {name: np.zeros_like(value) for name, value in params.items()}
            for index in batch:
                loss, grads, logits = network.loss_and_gradients(train_inputs[index], train_labels[index])
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch)
                total_loss += loss
                hits += int(np.argmax(logits) == train_labels[index])
                for name, grad in grads.items():
                    summed[name] += grad

            for name in params:
                velocity[name] = hyper.momentum * velocity[name] + summed[name] / len(batch)
                params[name] -= hyper.learning_rate * velocity[name]
                if not np.all(np.isfinite(params[name])):
                    raise TrainingDivergedError(epoch, f"tensor {name!r} became non-finite")

        network = Network(spec, Weights(params))
        test_acc = accuracy(network, test_inputs, test_labels) if test_inputs else None
        record = EpochRecord(epoch, total_loss / len(order), hits / len(order), test_acc)
        result.history.append(record)
        epochs.set_postfix(loss=f"{record.loss:.4f}", train=f"{record.train_accuracy:.3f}")
        logger.info(
            "epoch %d loss %.4f train %.3f test %s",
            epoch, record.loss, record.train_accuracy,
            "n/a" if test_acc is None else f"{test_acc:.3f}",
        )

    result.weights = Weights(params)
    return result
