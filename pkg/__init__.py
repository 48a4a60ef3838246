"""
Occlusion Robustness Toolkit

Measures how much of a 3D shape must be occluded before a point-cloud or
voxel classifier changes its mind. Provides the Iterative Salience Occlusion
attack in white-box and black-box form, a random occlusion baseline,
exhaustive verification for small inputs and an accuracy-vs-occlusion
evaluation harness.

License: MIT
Version: 0.1.0
"""

from agents import Goal, IsoAttacker, exhaustive_verify, iso, random_occlusion
from engine import ModelSpec, Network, train
from tools import PointCloud, VoxelGrid

__version__ = "0.1.0"

__all__ = [
    "Goal",
    "IsoAttacker",
    "exhaustive_verify",
    "iso",
    "random_occlusion",
    "ModelSpec",
    "Network",
    "train",
    "PointCloud",
    "VoxelGrid",
]
