"""
Sources package for shape dataset providers.
"""

from .base_source import BaseSource
from .synthetic_source import SyntheticSource
from .off_source import OffDirectorySource

__all__ = ['BaseSource', 'SyntheticSource', 'OffDirectorySource']
