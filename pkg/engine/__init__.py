"""
Neural network engine

Model specs, layer primitives, forward inference with latent introspection,
SGD training and the W3DR weight file format.
"""

from .spec import ConvStage, Family, ModelSpec, default_point_spec, default_voxel_spec
from .weights import (
    Weights,
    WeightsFormatError,
    WeightsShapeError,
    init_weights,
    load_weights,
    save_weights,
)
from .network import (
    EmptyInputError,
    FamilyMismatchError,
    ForwardTrace,
    Network,
    Prediction,
    to_model_input,
)
from .training import TrainingConfig, TrainingDivergedError, TrainingResult, accuracy, train

__all__ = [
    "ConvStage",
    "Family",
    "ModelSpec",
    "default_point_spec",
    "default_voxel_spec",
    "Weights",
    "WeightsFormatError",
    "WeightsShapeError",
    "init_weights",
    "load_weights",
    "save_weights",
    "EmptyInputError",
    "FamilyMismatchError",
    "ForwardTrace",
    "Network",
    "Prediction",
    "to_model_input",
    "TrainingConfig",
    "TrainingDivergedError",
    "TrainingResult",
    "accuracy",
    "train",
]
