"""
Base source class for shape dataset providers.
"""

import logging
import os
from abc import ABC, abstractmethod
from datetime import datetime
from typing import Any, Dict, Optional

from tools.dataset import Dataset, save_dataset

logger = logging.getLogger(__name__)


class BaseSource(ABC):
    """Base class for all shape dataset sources."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Initialize the source with configuration.

        Args:
            config: Configuration dictionary (sizes, seeds, paths)
        """
        self.config = dict(config or {})

    @abstractmethod
    def check(self) -> bool:
        """
        Check that the source can produce data.

        Returns:
            bool: True if load() is expected to succeed
        """

    @abstractmethod
    def load(self) -> Dataset:
        """
        Produce the labeled dataset.

        Returns:
            Dataset with train and test splits
        """

    def save_to_workspace(self, dataset: Dataset, name: str, folder: str = "data", timestamped: bool = False) -> str:
        """
        Save a dataset under the workspace data folder.

        Args:
            dataset: Dataset to save
            name: Directory name for the dataset
            folder: Parent folder for datasets
            timestamped: Append a timestamp so earlier exports are kept

        Returns:
            str: Path to the saved dataset directory
        """
        if timestamped:
            name = f"{name}_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        path = os.path.join(folder, name)
        save_dataset(dataset, path)
        logger.info("%s saved dataset to %s", type(self).__name__, path)
        return path

    def get_config_value(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value safely.

        Args:
            key: Configuration key
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        return self.config.get(key, default)
