"""
OFF directory source for ModelNet-style mesh collections.

Expected layout: <root>/<class>/{train,test}/*.off
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from tools.dataset import Dataset, derive_seed
from tools.geometry import normalize_unit_cube, sample_points
from tools.off_parser import OffParseError, read_off
from tools.synthetic import LabeledExample
from .base_source import BaseSource

logger = logging.getLogger(__name__)


class OffDirectorySource(BaseSource):
    """Source converting a tree of OFF meshes into normalized point clouds."""

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize the OFF source.

        Args:
            config: Configuration containing root, plus optional n_points,
                seed and skip_invalid
        """
        super().__init__(config)
        self.root = Path(self.get_config_value("root", "."))
        self.n_points = int(self.get_config_value("n_points", 256))
        self.seed = int(self.get_config_value("seed", 0))
        self.skip_invalid = bool(self.get_config_value("skip_invalid", True))

    def classes(self) -> List[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    def check(self) -> bool:
        if not self.root.is_dir():
            print(f"❌ OFF root not found: {self.root}")
            return False
        return any(self.root.glob("*/*/*.off"))

    def load(self) -> Dataset:
        classes = self.classes()
        splits: Dict[str, List[LabeledExample]] = {"train": [], "test": []}
        skipped = 0
        for label, class_name in enumerate(classes):
            for split_index, split in enumerate(("train", "test")):
                files = sorted((self.root / class_name / split).glob("*.off"))
                for i, path in enumerate(files):
                    try:
                        mesh = read_off(str(path))
                        cloud = sample_points(mesh, self.n_points, derive_seed(self.seed, label, split_index, i))
                        cloud = normalize_unit_cube(cloud)
                    except (OffParseError, ValueError) as e:
                        if not self.skip_invalid:
                            raise
                        logger.warning("Skipping %s: %s", path, e)
                        skipped += 1
                        continue
                    splits[split].append(LabeledExample(cloud, label, str(path.relative_to(self.root))))
        if skipped:
            print(f"⚠️ Skipped {skipped} unreadable meshes under {self.root}")
        return Dataset(classes, splits["train"], splits["test"])
