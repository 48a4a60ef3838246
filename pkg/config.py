"""
Configuration file for the occlusion robustness toolkit

This file centralizes the sizes, budgets, tolerances and paths used by the
toolkit. Values resolve in order: explicit override, ISO3D_* environment
variable, JSON config file, built-in default.
"""

import json
import os
from typing import Any, Dict, List, Optional

ENV_PREFIX = "ISO3D_"

DEFAULTS: Dict[str, Any] = {
    "N_POINTS": 256,
    "RESOLUTION": 16,
    "NOISE_SD": 0.01,
    "SEED": 0,
    "SAMPLE_SIZE": 200,
    "CHECKPOINTS": "0,25,50,75,95",
    "BUDGET_SECONDS": None,
    "BUDGET_QUERIES": None,
    "LATENT_TOLERANCE": 0.0,
    "LOGIT_TOLERANCE": 1e-6,
    "VOXEL_THRESHOLD": 0.25,
    "OUTPUT_DIR": "runs",
    "LOG_LEVEL": "INFO",
    "WORKERS": 1,
}

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def default_budget_seconds(class_count: int) -> float:
    """Per-input time cutoff: 2 s for up to 10 classes, 5 s beyond"""
    return 2.0 if class_count <= 10 else 5.0


class Config:
    """Centralized configuration for the toolkit"""

    def __init__(self, config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None):
        """
        Initialize configuration

        Args:
            config_file: Optional path to a JSON config file
            overrides: Values taking precedence over everything else (CLI flags)
        """
        self.config_file = config_file
        self._file: Dict[str, Any] = {}
        self._overrides = {k.upper(): v for k, v in (overrides or {}).items() if v is not None}
        self._load_config()

    def _load_config(self):
        """Load configuration from file if specified"""
        if self.config_file and os.path.exists(self.config_file):
            try:
                with open(self.config_file, "r") as f:
                    data = json.load(f)
                self._file = {k.upper().removeprefix(ENV_PREFIX): v for k, v in data.items()}
                print(f"✅ Loaded configuration from {self.config_file}")
            except (OSError, json.JSONDecodeError) as e:
                print(f"⚠️ Could not load config file: {e}")

    def _raw(self, key: str) -> Any:
        if key in self._overrides:
            return self._overrides[key]
        env = os.environ.get(ENV_PREFIX + key)
        if env not in (None, ""):
            return env
        if key in self._file:
            return self._file[key]
        return DEFAULTS[key]

    def _typed(self, key: str, cast):
        value = self._raw(key)
        if value is None:
            return None
        try:
            return cast(value)
        except (TypeError, ValueError):
            raise ValueError(f"{ENV_PREFIX}{key}={value!r} is not a valid {cast.__name__}")

    @property
    def n_points(self) -> int:
        return self._typed("N_POINTS", int)

    @property
    def resolution(self) -> int:
        return self._typed("RESOLUTION", int)

    @property
    def noise_sd(self) -> float:
        return self._typed("NOISE_SD", float)

    @property
    def seed(self) -> int:
        return self._typed("SEED", int)

    @property
    def sample_size(self) -> int:
        return self._typed("SAMPLE_SIZE", int)

    @property
    def checkpoints(self) -> List[float]:
        raw = self._raw("CHECKPOINTS")
        if isinstance(raw, (list, tuple)):
            return [float(c) for c in raw]
        return [float(c) for c in str(raw).split(",") if c.strip()]

    @property
    def budget_seconds(self) -> Optional[float]:
        return self._typed("BUDGET_SECONDS", float)

    @property
    def budget_queries(self) -> Optional[int]:
        return self._typed("BUDGET_QUERIES", int)

    @property
    def latent_tolerance(self) -> float:
        return self._typed("LATENT_TOLERANCE", float)

    @property
    def logit_tolerance(self) -> float:
        return self._typed("LOGIT_TOLERANCE", float)

    @property
    def voxel_threshold(self) -> float:
        return self._typed("VOXEL_THRESHOLD", float)

    @property
    def output_dir(self) -> str:
        return str(self._raw("OUTPUT_DIR"))

    @property
    def log_level(self) -> str:
        return str(self._raw("LOG_LEVEL")).upper()

    @property
    def workers(self) -> int:
        return self._typed("WORKERS", int)

    def budget_for(self, class_count: int) -> float:
        """Configured time budget, or the class-count default"""
        budget = self.budget_seconds
        return budget if budget is not None else default_budget_seconds(class_count)

    def as_dict(self) -> Dict[str, Any]:
        return {key.lower(): self._raw(key) for key in DEFAULTS}

    def problems(self) -> List[str]:
        """Human-readable list of invalid settings"""
        problems = []
        checks = [
            ("N_POINTS", lambda: self.n_points >= 8),
            ("RESOLUTION", lambda: self.resolution >= 2),
            ("NOISE_SD", lambda: self.noise_sd >= 0),
            ("SAMPLE_SIZE", lambda: self.sample_size >= 1),
            ("CHECKPOINTS", lambda: self.checkpoints == sorted(self.checkpoints)
                and all(0 <= c <= 100 for c in self.checkpoints)),
            ("BUDGET_SECONDS", lambda: self.budget_seconds is None or self.budget_seconds > 0),
            ("BUDGET_QUERIES", lambda: self.budget_queries is None or self.budget_queries > 0),
            ("LATENT_TOLERANCE", lambda: self.latent_tolerance >= 0),
            ("LOGIT_TOLERANCE", lambda: self.logit_tolerance >= 0),
            ("VOXEL_THRESHOLD", lambda: 0 < self.voxel_threshold <= 1),
            ("LOG_LEVEL", lambda: self.log_level in LOG_LEVELS),
            ("WORKERS", lambda: self.workers >= 1),
        ]
        for key, check in checks:
            try:
                if not check():
                    problems.append(f"{ENV_PREFIX}{key}={self._raw(key)!r}")
            except ValueError as e:
                problems.append(str(e))
        return problems

    def validate(self) -> bool:
        """Validate every setting"""
        problems = self.problems()
        if problems:
            print(f"❌ Invalid configuration: {', '.join(problems)}")
            return False
        return True

    def print_status(self):
        """Print current configuration status"""
        print("🔧 Configuration Status:")
        for key, value in self.as_dict().items():
            print(f"   {key}: {value if value is not None else '(default)'}")
        print(f"   Config File: {'✅ Loaded' if self._file else '❌ Not used'}")


# Global config instance
config = Config()


def get_config(config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Config:
    """
    Get configuration instance

    Args:
        config_file: Optional path to config file
        overrides: Optional values taking precedence over env and file

    Returns:
        Config instance
    """
    if config_file or overrides:
        return Config(config_file, overrides)
    return config
