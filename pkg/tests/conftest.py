"""Shared fixtures: tiny hand-built models and small datasets."""

import numpy as np
import pytest

from engine import ConvStage, Family, ModelSpec, Network, Weights, init_weights
from tools.dataset import make_synthetic_dataset
from tools.geometry import PointCloud


def point_spec(latent: int = 4, classes: int = 2, hidden=()) -> ModelSpec:
    """Point-set spec with one shared layer and a linear head by default"""
    return ModelSpec(
        family=Family.POINT_SET,
        class_count=classes,
        point_widths=(3,) + tuple(hidden) + (latent,),
        fcn_widths=(classes,),
    )


def random_point_network(seed: int, latent: int = 4, classes: int = 2) -> Network:
    """Random point network with zero point biases and a random linear head"""
    spec = point_spec(latent, classes)
    tensors = init_weights(spec, seed=seed).to_dict()
    rng = np.random.default_rng(seed + 1000)
    tensors["fc.0.bias"] = rng.normal(0.0, 0.5, size=classes).astype(np.float32)
    return Network(spec, Weights(tensors))


def threshold_network(cut: float = 0.6) -> Network:
    """
    One latent dimension relu(x); logits (0, l - cut), so the model says
    class 1 exactly when the largest x coordinate exceeds cut.
    """
    spec = point_spec(latent=1, classes=2)
    weights = Weights({
        "point.0.kernel": np.array([[1.0], [0.0], [0.0]], dtype=np.float32),
        "point.0.bias": np.zeros(1, dtype=np.float32),
        "fc.0.kernel": np.array([[0.0, 1.0]], dtype=np.float32),
        "fc.0.bias": np.array([0.0, -cut], dtype=np.float32),
    })
    return Network(spec, weights)


def cloud_with_x(xs, seed: int = 0) -> PointCloud:
    """Cloud whose x coordinates are xs; y and z are distinct fillers"""
    rng = np.random.default_rng(seed)
    n = len(xs)
    points = np.column_stack([xs, rng.uniform(0, 1, n), rng.uniform(0, 1, n)])
    return PointCloud(points)


def random_cloud(n: int, seed: int) -> PointCloud:
    return PointCloud(np.random.default_rng(seed).uniform(0.0, 1.0, size=(n, 3)))


@pytest.fixture
def tiny_voxel_spec() -> ModelSpec:
    return ModelSpec(
        family=Family.VOLUMETRIC,
        class_count=3,
        conv_stages=(ConvStage(2, 3, 2),),
        resolution=4,
        fcn_widths=(3,),
    )


@pytest.fixture
def tiny_dataset():
    return make_synthetic_dataset(
        kinds=("sphere", "cube"), train_per_class=3, test_per_class=3, n_points=24, noise_sd=0.0, seed=7
    )


@pytest.fixture
def clean_env(monkeypatch):
    """Drop every ISO3D_* variable so config tests see defaults only"""
    import os

    for key in list(os.environ):
        if key.startswith("ISO3D_"):
            monkeypatch.delenv(key)
    return monkeypatch
