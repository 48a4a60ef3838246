"""
Attack goals and budgets.
"""

import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from engine.network import ForwardTrace, Prediction

# Restart cap for runs that name neither a budget nor max_restarts
DEFAULT_MAX_RESTARTS = 64


class GoalKind(str, Enum):
    UNTARGETED = "untargeted"
    TARGETED = "targeted"
    CONFIDENCE_DROP = "confidence_drop"


@dataclass(frozen=True)
class Goal:
    """
    What an attack tries to reach and when it must give up.

    Args:
        kind: untargeted (leave the original class), targeted (reach target)
            or confidence_drop (N_y(x) - N_y(x') > k for the original class y)
        target: Target class for targeted goals
        k: Probability drop for confidence_drop goals
        budget_seconds: Wall-clock limit
        budget_queries: Forward-pass limit
        exhaustive: Enumerate every ranking (no wall-clock limit allowed)
        minimize: Keep restarting after a success and return the smallest occlusion
        max_restarts: Restart limit
    """

    kind: GoalKind = GoalKind.UNTARGETED
    target: Optional[int] = None
    k: Optional[float] = None
    budget_seconds: Optional[float] = None
    budget_queries: Optional[int] = None
    exhaustive: bool = False
    minimize: bool = False
    max_restarts: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GoalKind(self.kind))
        if self.kind is GoalKind.TARGETED and self.target is None:
            raise ValueError("targeted goals need a target class")
        if self.kind is not GoalKind.TARGETED and self.target is not None:
            raise ValueError(f"{self.kind.value} goals take no target class")
        if self.kind is GoalKind.CONFIDENCE_DROP and (self.k is None or not 0.0 < self.k < 1.0):
            raise ValueError("confidence_drop goals need k in (0, 1)")
        if self.kind is not GoalKind.CONFIDENCE_DROP and self.k is not None:
            raise ValueError(f"{self.kind.value} goals take no k")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise ValueError("budget_seconds must be positive")
        if self.budget_queries is not None and self.budget_queries <= 0:
            raise ValueError("budget_queries must be positive")
        if self.max_restarts is not None and self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        if self.exhaustive and self.budget_seconds is not None:
            raise ValueError("exhaustive goals cannot carry a wall-clock limit")

    @classmethod
    def untargeted(cls, **kwargs) -> "Goal":
        return cls(GoalKind.UNTARGETED, **kwargs)

    @classmethod
    def targeted(cls, target: int, **kwargs) -> "Goal":
        return cls(GoalKind.TARGETED, target=target, **kwargs)

    @classmethod
    def confidence_drop(cls, k: float, **kwargs) -> "Goal":
        return cls(GoalKind.CONFIDENCE_DROP, k=k, **kwargs)

    @property
    def restart_limit(self) -> Optional[int]:
        if self.max_restarts is not None:
            return self.max_restarts
        if self.exhaustive or self.budget_seconds is not None or self.budget_queries is not None:
            return None
        return DEFAULT_MAX_RESTARTS

    def is_met(self, original: Prediction, reference: ForwardTrace, trace: ForwardTrace) -> bool:
        """
        Goal predicate on an occluded input's trace.

        Args:
            original: Prediction on the unoccluded input (class y)
            reference: Trace of the unoccluded input
            trace: Trace of the occluded input
        """
        if self.kind is GoalKind.UNTARGETED:
            return trace.predicted_class != original.label
        if self.kind is GoalKind.TARGETED:
            return trace.predicted_class == self.target
        y = original.label
        return float(reference.probs[y] - trace.probs[y]) > self.k

    def describe(self) -> str:
        if self.kind is GoalKind.TARGETED:
            return f"targeted({self.target})"
        if self.kind is GoalKind.CONFIDENCE_DROP:
            return f"confidence_drop({self.k})"
        return self.kind.value


class Budget:
    """Wall-clock and query limits of one attack run"""

    def __init__(self, goal: Goal, counter):
        self.seconds = goal.budget_seconds
        self.queries = goal.budget_queries
        self.counter = counter
        self.started = time.perf_counter()
        self._start_queries = counter.queries

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.started

    @property
    def used_queries(self) -> int:
        return self.counter.queries - self._start_queries

    def exhausted(self) -> bool:
        if self.seconds is not None and self.elapsed >= self.seconds:
            return True
        return self.queries is not None and self.used_queries >= self.queries
