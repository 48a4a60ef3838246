"""
Tools package for the occlusion robustness toolkit

Contains the shape data utilities: geometry types, OFF mesh parsing,
surface sampling, normalization, voxelization, synthetic shapes and the
on-disk point-cloud and dataset formats.
"""

from .geometry import Mesh, PointCloud, VoxelGrid, normalize_unit_cube, sample_points, voxelize
from .off_parser import OffParseError, parse_off, read_off
from .synthetic import SHAPE_KINDS, LabeledExample, UnknownShapeError, synth_shape
from .dataset import (
    Dataset,
    FormatError,
    load_cloud,
    load_dataset,
    make_synthetic_dataset,
    save_cloud,
    save_dataset,
)

__all__ = [
    "Mesh",
    "PointCloud",
    "VoxelGrid",
    "normalize_unit_cube",
    "sample_points",
    "voxelize",
    "OffParseError",
    "parse_off",
    "read_off",
    "SHAPE_KINDS",
    "LabeledExample",
    "UnknownShapeError",
    "synth_shape",
    "Dataset",
    "FormatError",
    "load_cloud",
    "load_dataset",
    "make_synthetic_dataset",
    "save_cloud",
    "save_dataset",
]
