"""
Synthetic shape source: analytic surfaces standing in for ModelNet classes.
"""

from typing import Any, Dict, Optional

from tools.dataset import Dataset, make_synthetic_dataset
from tools.synthetic import SHAPE_KINDS, GENERATORS
from .base_source import BaseSource


class SyntheticSource(BaseSource):
    """Source generating labeled clouds from analytic shapes."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Initialize the synthetic source.

        Args:
            config: Optional keys kinds, train_per_class, test_per_class,
                n_points, noise_sd, seed
        """
        super().__init__(config)
        self.kinds = list(self.get_config_value("kinds", SHAPE_KINDS))
        self.train_per_class = int(self.get_config_value("train_per_class", 200))
        self.test_per_class = int(self.get_config_value("test_per_class", 50))
        self.n_points = int(self.get_config_value("n_points", 256))
        self.noise_sd = float(self.get_config_value("noise_sd", 0.01))
        self.seed = int(self.get_config_value("seed", 0))

    def check(self) -> bool:
        unknown = [kind for kind in self.kinds if kind not in GENERATORS]
        if unknown:
            print(f"❌ Unknown shape kinds: {', '.join(unknown)}")
            return False
        return self.n_points >= 8 and self.train_per_class >= 0 and self.test_per_class >= 0

    def load(self) -> Dataset:
        return make_synthetic_dataset(
            kinds=self.kinds,
            train_per_class=self.train_per_class,
            test_per_class=self.test_per_class,
            n_points=self.n_points,
            noise_sd=self.noise_sd,
            seed=self.seed,
        )
