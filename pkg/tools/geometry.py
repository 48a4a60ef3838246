"""
Geometry Utilities for 3D Shape Data

Provides the core shape types (meshes, point clouds, voxel grids) and the
operations that turn raw geometry into classifier inputs: area-weighted
surface sampling, unit-cube normalization and voxelization.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

# Extra sampling rounds used to top up a cloud after duplicate collapse
MAX_SAMPLING_ROUNDS = 16


def unique_rows(points: np.ndarray) -> np.ndarray:
    """Collapse duplicate rows, keeping the first occurrence of each."""
    if len(points) == 0:
        return points
    _, first = np.unique(points, axis=0, return_index=True)
    return points[np.sort(first)]


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh: vertex coordinates plus vertex-index triples"""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(triangles) and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError(
                f"triangle index out of range for {len(vertices)} vertices"
            )
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

    def triangle_areas(self) -> np.ndarray:
        """Area of every triangle"""
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def without_degenerate(self) -> "Mesh":
        """Copy of the mesh with zero-area triangles dropped"""
        if len(self.triangles) == 0:
            return self
        keep = self.triangle_areas() > 0.0
        return Mesh(self.vertices, self.triangles[keep])


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    Finite set of unique 3D points.

    Points are stored as an (n, 3) float32 array. Duplicate rows are
    collapsed on construction, so ``len(cloud)`` is the number of unique
    points.
    """

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.float32))

    def __post_init__(self):
        points = np.ascontiguousarray(np.asarray(self.points, dtype=np.float32).reshape(-1, 3))
        points = unique_rows(points)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def subset(self, mask: np.ndarray) -> "PointCloud":
        """Points selected by a boolean mask (or index array)"""
        return PointCloud(self.points[mask])

    def is_normalized(self, tol: float = 1e-6) -> bool:
        if len(self) == 0:
            return True
        return bool(self.points.min() >= -tol and self.points.max() <= 1.0 + tol)


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """d x d x d occupancy grid with values in [0, 1]"""

    resolution: int
    occupancy: np.ndarray

    def __post_init__(self):
        d = int(self.resolution)
        occupancy = np.asarray(self.occupancy, dtype=np.float32)
        if occupancy.shape != (d, d, d):
            raise ValueError(f"occupancy shape {occupancy.shape} does not match resolution {d}")
        if occupancy.size and (occupancy.min() < 0.0 or occupancy.max() > 1.0):
            raise ValueError("occupancy values must lie in [0, 1]")
        occupancy = np.ascontiguousarray(occupancy)
        occupancy.setflags(write=False)
        object.__setattr__(self, "resolution", d)
        object.__setattr__(self, "occupancy", occupancy)

    def __len__(self) -> int:
        return int(np.count_nonzero(self.occupancy > 0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return self.resolution == other.resolution and np.array_equal(self.occupancy, other.occupancy)

    def __hash__(self):
        return hash((self.resolution, self.occupancy.tobytes()))

    def occupied_cells(self) -> np.ndarray:
        """(m, 3) integer indices of occupied cells, in lexicographic order"""
        return np.argwhere(self.occupancy > 0)

    @classmethod
    def from_cells(cls, resolution: int, cells: np.ndarray) -> "VoxelGrid":
        occupancy = np.zeros((resolution,) * 3, dtype=np.float32)
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 3)
        if len(cells):
            occupancy[cells[:, 0], cells[:, 1], cells[:, 2]] = 1.0
        return cls(resolution, occupancy)


def sample_points(mesh: Mesh, n: int, seed: Optional[int] = None) -> PointCloud:
    """
    Sample points uniformly by surface area.

    Args:
        mesh: Source mesh (zero-area faces are ignored)
        n: Number of unique points wanted
        seed: Seed for the random generator

    Returns:
        PointCloud with n unique points, or fewer if the retry cap is hit
    """
    if n < 0:
        raise ValueError(f"point count must be non-negative, got {n}")
    mesh = mesh.without_degenerate()
    if len(mesh.triangles) == 0:
        raise ValueError("mesh has no triangles with positive area")
    if n == 0:
        return PointCloud()

    rng = np.random.default_rng(seed)
    areas = mesh.triangle_areas()
    probabilities = areas / areas.sum()
    corners = mesh.vertices[mesh.triangles]

    collected = np.zeros((0, 3), dtype=np.float32)
    for _ in range(MAX_SAMPLING_ROUNDS):
        missing = n - len(collected)
        if missing <= 0:
            break
        faces = rng.choice(len(probabilities), size=missing, p=probabilities)
        r1 = np.sqrt(rng.random(missing))
        r2 = rng.random(missing)
        a, b, c = corners[faces, 0], corners[faces, 1], corners[faces, 2]
        drawn = (1.0 - r1)[:, None] * a + (r1 * (1.0 - r2))[:, None] * b + (r1 * r2)[:, None] * c
        collected = unique_rows(np.concatenate([collected, drawn.astype(np.float32)]))

    if len(collected) < n:
        logger.warning("Sampling stopped at %d of %d unique points", len(collected), n)
    return PointCloud(collected[:n])


def normalize_unit_cube(pc: PointCloud) -> PointCloud:
    """
    Scale and translate a cloud into the unit cube.

    The scaling is isotropic: the longest axis spans exactly [0, 1] and the
    shorter axes are centred inside the cube. A cloud whose points all
    coincide is placed at the cube centre.
    """
    if len(pc) == 0:
        raise ValueError("cannot normalize an empty point cloud")

    points = pc.points.astype(np.float64)
    lower = points.min(axis=0)
    extent = points.max(axis=0) - lower
    longest = extent.max()
    if longest == 0.0:
        return PointCloud(np.full((1, 3), 0.5))

    scale = 1.0 / longest
    offset = (1.0 - extent * scale) / 2.0
    normalized = (points - lower) * scale + offset
    return PointCloud(np.clip(normalized, 0.0, 1.0))


def voxel_indices(points: np.ndarray, resolution: int) -> np.ndarray:
    """Cell index of every point: floor(coordinate * d), clamped to d - 1"""
    scaled = np.floor(np.asarray(points, dtype=np.float64) * resolution).astype(np.int64)
    return np.clip(scaled, 0, resolution - 1)


def voxelize(pc: PointCloud, resolution: int, tol: float = 1e-6) -> VoxelGrid:
    """
    Binary occupancy grid of a normalized cloud.

    A cell holds 1.0 when at least one point falls into it, else 0.0.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    if not pc.is_normalized(tol):
        raise ValueError("point cloud must be normalized to the unit cube before voxelization")
    return VoxelGrid.from_cells(resolution, voxel_indices(pc.points, resolution))
