"""
Synthetic Labeled Shapes

Desk-scale stand-ins for ModelNet classes: points sampled on analytic
surfaces, perturbed by Gaussian noise and normalized to the unit cube.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .geometry import PointCloud, normalize_unit_cube

SHAPE_KINDS = ("sphere", "cube", "cylinder", "cone", "torus")


class UnknownShapeError(ValueError):
    """Requested a shape kind with no generator"""


@dataclass(frozen=True)
class LabeledExample:
    """Classifier input with its class index and provenance tag"""

    input: PointCloud
    label: int
    source: str


def _sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    directions = rng.normal(size=(n, 3))
    return 0.5 * directions / np.linalg.norm(directions, axis=1, keepdims=True)


def _cube(rng: np.random.Generator, n: int) -> np.ndarray:
    points = rng.uniform(-1.0, 1.0, size=(n, 3))
    axis = rng.integers(0, 3, size=n)
    side = rng.choice([-1.0, 1.0], size=n)
    points[np.arange(n), axis] = side
    return points


def _cylinder(rng: np.random.Generator, n: int, radius: float = 0.5, height: float = 1.5) -> np.ndarray:
    side_area = 2.0 * np.pi * radius * height
    cap_area = np.pi * radius ** 2
    on_side = rng.random(n) < side_area / (side_area + 2.0 * cap_area)

    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    # Caps: uniform over the disc
    r = np.where(on_side, radius, radius * np.sqrt(rng.random(n)))
    z = np.where(
        on_side,
        rng.uniform(-height / 2.0, height / 2.0, size=n),
        rng.choice([-height / 2.0, height / 2.0], size=n),
    )
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)


def _cone(rng: np.random.Generator, n: int, radius: float = 0.5, height: float = 1.0) -> np.ndarray:
    slant = np.hypot(radius, height)
    lateral_area = np.pi * radius * slant
    base_area = np.pi * radius ** 2
    on_side = rng.random(n) < lateral_area / (lateral_area + base_area)

    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    # Lateral area grows linearly with distance from the apex
    t = np.sqrt(rng.random(n))
    r = np.where(on_side, radius * t, radius * np.sqrt(rng.random(n)))
    z = np.where(on_side, height * (1.0 - t), 0.0)
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)


def _torus(rng: np.random.Generator, n: int, major: float = 0.35, minor: float = 0.15) -> np.ndarray:
    # Rejection on the tube angle gives area-uniform samples
    accepted = []
    count = 0
    while count < n:
        v = rng.uniform(0.0, 2.0 * np.pi, size=2 * n)
        keep = rng.random(2 * n) < (major + minor * np.cos(v)) / (major + minor)
        accepted.append(v[keep])
        count += int(keep.sum())
    v = np.concatenate(accepted)[:n]
    u = rng.uniform(0.0, 2.0 * np.pi, size=n)
    ring = major + minor * np.cos(v)
    return np.stack([ring * np.cos(u), ring * np.sin(u), minor * np.sin(v)], axis=1)


GENERATORS: Dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    "sphere": _sphere,
    "cube": _cube,
    "cylinder": _cylinder,
    "cone": _cone,
    "torus": _torus,
}


def synth_shape(kind: str, n: int, noise_sd: float = 0.0, seed: Optional[int] = None) -> LabeledExample:
    """
    Generate one labeled synthetic shape.

    Args:
        kind: One of SHAPE_KINDS
        n: Number of surface points (at least 8)
        noise_sd: Standard deviation of the isotropic Gaussian jitter
        seed: Random seed; identical arguments give bit-identical clouds

    Returns:
        LabeledExample whose label is the index of kind in SHAPE_KINDS
    """
    if kind not in GENERATORS:
        raise UnknownShapeError(f"unknown shape kind {kind!r}, expected one of {', '.join(SHAPE_KINDS)}")
    if n < 8:
        raise ValueError(f"synthetic shapes need at least 8 points, got {n}")
    if noise_sd < 0:
        raise ValueError(f"noise standard deviation must be non-negative, got {noise_sd}")

    rng = np.random.default_rng(seed)
    points = GENERATORS[kind](rng, n)
    if noise_sd > 0:
        points = points + rng.normal(0.0, noise_sd, size=points.shape)

    cloud = normalize_unit_cube(PointCloud(points))
    return LabeledExample(input=cloud, label=SHAPE_KINDS.index(kind), source=f"synthetic:{kind}:{seed}")
