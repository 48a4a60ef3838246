"""
Query accounting and the occlusion subject.

Attacks see a model only through QueryCounter, which counts every forward
pass. OcclusionSubject turns an input into a list of removable elements
(points, or occupied voxel cells) and rebuilds inputs from survivor masks.
"""

import logging
from typing import Union

import numpy as np

from engine.network import ForwardTrace, Network, Prediction, ShapeInput
from engine.spec import Family
from tools.geometry import PointCloud, VoxelGrid

logger = logging.getLogger(__name__)


class QueryCounter:
    """Wraps a Network and counts forward passes"""

    def __init__(self, network: Network):
        self.network = network
        self.queries = 0

    @property
    def spec(self):
        return self.network.spec

    @property
    def family(self) -> Family:
        return self.network.family

    def forward(self, x: ShapeInput) -> ForwardTrace:
        self.queries += 1
        return self.network.forward(x)

    def predict(self, x: ShapeInput) -> Prediction:
        return self.forward(x).prediction()

    def head(self, latent: np.ndarray) -> np.ndarray:
        """White-box access to the FCN; not counted as a query"""
        return self.network.head(latent)

    def reset(self):
        self.queries = 0


def as_counter(model: Union[Network, QueryCounter]) -> QueryCounter:
    return model if isinstance(model, QueryCounter) else QueryCounter(model)


class OcclusionSubject:
    """
    The removable elements of one input.

    Element i is point i of a cloud, or the i-th occupied cell (lexicographic
    order) of a grid. Survivor masks are boolean arrays over these elements.
    """

    def __init__(self, x: ShapeInput):
        self.input = x
        if isinstance(x, PointCloud):
            self.cells = None
            self.size = len(x)
        elif isinstance(x, VoxelGrid):
            self.cells = x.occupied_cells()
            self.size = len(self.cells)
        else:
            raise TypeError(f"cannot occlude {type(x).__name__}")

    def __len__(self) -> int:
        return self.size

    def full_mask(self) -> np.ndarray:
        return np.ones(self.size, dtype=bool)

    def build(self, mask: np.ndarray) -> ShapeInput:
        """Input made of the elements where mask is True"""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.size,):
            raise ValueError(f"mask has shape {mask.shape}, expected ({self.size},)")
        if self.cells is None:
            return self.input.subset(mask)
        return VoxelGrid.from_cells(self.input.resolution, self.cells[mask])

    def without(self, mask: np.ndarray, element: int) -> np.ndarray:
        trial = mask.copy()
        trial[element] = False
        return trial

    def coordinates(self) -> np.ndarray:
        """(size, 3) positions: point coordinates, or cell centres in unit-cube units"""
        if self.cells is None:
            return self.input.points.astype(np.float64)
        return (self.cells + 0.5) / self.input.resolution
