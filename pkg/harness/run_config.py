"""
Run configuration for batch robustness evaluation.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from agents.goals import Goal
from config import Config, default_budget_seconds

ATTACK_KINDS = ("iso", "iso-blackbox", "random")
DEFAULT_CHECKPOINTS = (0.0, 25.0, 50.0, 75.0, 95.0)


class RunConfigError(ValueError):
    """Inconsistent or unsatisfiable run configuration"""


@dataclass(frozen=True)
class RunConfig:
    """
    Everything that determines one evaluation run.

    A run with budget_queries and no budget_seconds has no wall-clock limit,
    which makes its output independent of machine speed. With neither set,
    the per-input time limit defaults by class count.
    """

    model_path: str
    dataset_path: str
    sample_size: int = 200
    attack: str = "iso"
    goal: Goal = field(default_factory=Goal)
    checkpoints: Tuple[float, ...] = DEFAULT_CHECKPOINTS
    budget_seconds: Optional[float] = None
    budget_queries: Optional[int] = None
    seed: int = 0
    output_dir: str = "runs"
    tolerance: float = 1e-6
    threshold: float = 0.25
    score: str = "count"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "checkpoints", tuple(float(c) for c in self.checkpoints))
        self.validate()

    def validate(self):
        if self.attack not in ATTACK_KINDS:
            raise RunConfigError(f"unknown attack {self.attack!r}; choose from {', '.join(ATTACK_KINDS)}")
        if self.sample_size < 1:
            raise RunConfigError("sample_size must be positive")
        if list(self.checkpoints) != sorted(self.checkpoints):
            raise RunConfigError(f"checkpoints must be sorted, got {self.checkpoints}")
        if any(not 0.0 <= c <= 100.0 for c in self.checkpoints):
            raise RunConfigError("checkpoints must lie within [0, 100]")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise RunConfigError("budget_seconds must be positive")
        if self.budget_queries is not None and self.budget_queries <= 0:
            raise RunConfigError("budget_queries must be positive")
        if self.workers < 1:
            raise RunConfigError("workers must be positive")

    @property
    def method(self) -> str:
        return self.attack

    def attack_goal(self, class_count: int) -> Goal:
        """The configured goal with this run's budgets applied"""
        seconds = self.budget_seconds
        if seconds is None and self.budget_queries is None:
            seconds = default_budget_seconds(class_count)
        return replace(self.goal, budget_seconds=seconds, budget_queries=self.budget_queries)

    def with_attack(self, attack: str) -> "RunConfig":
        return replace(self, attack=attack)

    @classmethod
    def from_config(cls, cfg: Config, model_path: str, dataset_path: str, **kwargs) -> "RunConfig":
        """RunConfig seeded from a Config; keyword arguments win"""
        values = dict(
            sample_size=cfg.sample_size,
            checkpoints=tuple(cfg.checkpoints),
            budget_seconds=cfg.budget_seconds,
            budget_queries=cfg.budget_queries,
            seed=cfg.seed,
            output_dir=cfg.output_dir,
            tolerance=cfg.logit_tolerance,
            threshold=cfg.voxel_threshold,
            workers=cfg.workers,
        )
        values.update({k: v for k, v in kwargs.items() if v is not None})
        return cls(model_path=model_path, dataset_path=dataset_path, **values)
