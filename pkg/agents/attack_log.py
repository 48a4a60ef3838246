"""
Attack results and the replayable attack log.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from engine.network import Prediction, ShapeInput

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "action", "element_index", "confidence_before", "confidence_after", "predicted_class"]
ACTIONS = ("remove", "restore", "restart")


@dataclass(frozen=True)
class LogEvent:
    step: int
    action: str
    element_index: int
    confidence_before: float
    confidence_after: float
    predicted_class: int


@dataclass
class AttackResult:
    """
    Outcome of one attack.

    removed lists element indices of the original input in removal order;
    survivor is the original input without them.
    """

    survivor: ShapeInput
    removed: Tuple[int, ...]
    n_elements: int
    queries: int
    elapsed: float
    goal_met: bool
    predicted_before: Prediction
    predicted_after: Prediction
    method: str = "iso"
    restarts: int = 0
    exhausted: bool = False
    log: List[LogEvent] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def occlusion_size(self) -> int:
        return len(self.removed)

    @property
    def occlusion_fraction(self) -> float:
        return self.occlusion_size / self.n_elements if self.n_elements else 0.0

    def log_frame(self) -> pd.DataFrame:
        return log_to_frame(self.log)

    def save_log(self, path: str) -> str:
        self.log_frame().to_csv(path, index=False)
        return path


def log_to_frame(events: List[LogEvent]) -> pd.DataFrame:
    return pd.DataFrame([vars(e) for e in events], columns=LOG_COLUMNS)


def load_log(path: str) -> List[LogEvent]:
    frame = pd.read_csv(path)
    missing = set(LOG_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"attack log lacks columns {sorted(missing)}")
    return [
        LogEvent(
            int(r.step), str(r.action), int(r.element_index),
            float(r.confidence_before), float(r.confidence_after), int(r.predicted_class),
        )
        for r in frame.itertuples(index=False)
    ]


class EventLog:
    """Append-only event list with a running step counter"""

    def __init__(self):
        self.events: List[LogEvent] = []

    def add(self, action: str, element: int, before: float, after: float, predicted: int):
        self.events.append(
            LogEvent(len(self.events), action, int(element), float(before), float(after), int(predicted))
        )


def survivor_mask(n: int, removed: Tuple[int, ...]) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[list(removed)] = False
    return mask
