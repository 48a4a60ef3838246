"""
Forward inference with latent introspection, and backpropagation for training.

Both families read as Data -> Latent Translation -> Pooling -> FCN. The latent
translation runs in the weights' dtype (32-bit for stored models); the FCN
head is accumulated in 64-bit floats so every change of the pooled latent
stays visible in the logits.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from tools.geometry import PointCloud, VoxelGrid, voxelize
from .layers import (
    conv3d_backward,
    conv3d_forward,
    cross_entropy,
    dense_backward,
    dense_forward,
    maxpool3d_backward,
    maxpool3d_forward,
    point_maxpool_backward,
    point_maxpool_forward,
    relu_backward,
    relu_forward,
    rowwise_dense,
    softmax,
)
from .spec import Family, ModelSpec
from .weights import Weights

logger = logging.getLogger(__name__)

ShapeInput = Union[PointCloud, VoxelGrid]


class FamilyMismatchError(ValueError):
    """Input type or geometry does not fit the model family"""


class EmptyInputError(ValueError):
    """Point-set models need at least one point"""


class Prediction(NamedTuple):
    label: int
    confidence: float


@dataclass(frozen=True)
class ForwardTrace:
    """
    Everything a forward pass exposes.

    per_point_latent is set for point-set models; conv_activation (final
    stage, after ReLU, before pooling), pool_window and downsample (total
    pooling factor applied before the final stage) for volumetric models.
    """

    logits: np.ndarray
    probs: np.ndarray
    pooled_latent: np.ndarray
    per_point_latent: Optional[np.ndarray] = None
    conv_activation: Optional[np.ndarray] = None
    pool_window: int = 1
    downsample: int = 1

    @property
    def predicted_class(self) -> int:
        return int(np.argmax(self.logits))

    @property
    def confidence(self) -> float:
        return float(self.probs[self.predicted_class])

    def prediction(self) -> Prediction:
        return Prediction(self.predicted_class, self.confidence)


class Network:
    """A ModelSpec bound to validated Weights"""

    def __init__(self, spec: ModelSpec, weights: Weights):
        weights.validate(spec)
        self.spec = spec
        self.weights = weights
        self.dtype = weights.dtype
        self._head = [
            (weights[f"fc.{i}.kernel"].astype(np.float64), weights[f"fc.{i}.bias"].astype(np.float64))
            for i in range(len(spec.fcn_widths))
        ]

    @property
    def family(self) -> Family:
        return self.spec.family

    def validate_nonzero_head(self) -> bool:
        """True when every FCN kernel entry is non-zero (black-box critical sets are exact then)"""
        return all(np.all(kernel != 0) for kernel, _ in self._head)

    def check_input(self, x: ShapeInput):
        if self.family is Family.POINT_SET:
            if not isinstance(x, PointCloud):
                raise FamilyMismatchError(f"point-set model given {type(x).__name__}")
            if len(x) == 0:
                raise EmptyInputError("cannot classify an empty point cloud")
        else:
            if not isinstance(x, VoxelGrid):
                raise FamilyMismatchError(f"volumetric model given {type(x).__name__}")
            if x.resolution != self.spec.resolution:
                raise FamilyMismatchError(
                    f"model expects resolution {self.spec.resolution}, grid has {x.resolution}"
                )

    def head(self, latent: np.ndarray) -> np.ndarray:
        """Apply the FCN to a pooled latent vector; returns 64-bit logits"""
        h = np.asarray(latent, dtype=np.float64)
        last = len(self._head) - 1
        for i, (kernel, bias) in enumerate(self._head):
            h = h @ kernel + bias
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    def point_latent(self, points: np.ndarray) -> np.ndarray:
        """Per-point latent rows; each row depends on its own point only"""
        h = np.asarray(points, dtype=self.dtype)
        for i in range(len(self.spec.point_widths) - 1):
            h = relu_forward(rowwise_dense(h, self.weights[f"point.{i}.kernel"], self.weights[f"point.{i}.bias"]))
        return h

    def forward(self, x: ShapeInput) -> ForwardTrace:
        self.check_input(x)
        if self.family is Family.POINT_SET:
            per_point = self.point_latent(x.points)
            pooled = per_point.max(axis=0)
            logits = self.head(pooled)
            return ForwardTrace(logits, softmax(logits), pooled, per_point_latent=per_point)

        h = x.occupancy.astype(self.dtype)[None]
        downsample = 1
        stages = self.spec.conv_stages
        activation = h
        for i, stage in enumerate(stages):
            activation = relu_forward(
                conv3d_forward(h, self.weights[f"conv.{i}.kernel"], self.weights[f"conv.{i}.bias"])
            )
            h, _ = maxpool3d_forward(activation, stage.pool)
            if i < len(stages) - 1:
                downsample *= stage.pool
        pooled = h.reshape(-1)
        logits = self.head(pooled)
        return ForwardTrace(
            logits,
            softmax(logits),
            pooled,
            conv_activation=activation,
            pool_window=stages[-1].pool,
            downsample=downsample,
        )

    def predict(self, x: ShapeInput) -> Prediction:
        """Class with the highest logit (lowest index on ties) and its probability"""
        return self.forward(x).prediction()

    def loss_and_gradients(self, x: ShapeInput, label: int) -> Tuple[float, Dict[str, np.ndarray], np.ndarray]:
        """
        Cross-entropy loss of one example and its gradient for every tensor.

        Everything runs in the weights' dtype with plain matrix products, so
        building the Network on 64-bit weights gives a finite-difference
        friendly path.

        Returns:
            (loss, gradients by tensor name, logits)
        """
        self.check_input(x)
        w = self.weights
        grads: Dict[str, np.ndarray] = {}

        if self.family is Family.POINT_SET:
            cache: List[Tuple[np.ndarray, np.ndarray]] = []
            h = np.asarray(x.points, dtype=self.dtype)
            for i in range(len(self.spec.point_widths) - 1):
                pre = dense_forward(h, w[f"point.{i}.kernel"], w[f"point.{i}.bias"])
                cache.append((h, pre))
                h = relu_forward(pre)
            latent, winners = point_maxpool_forward(h)
        else:
            cache = []
            h = x.occupancy.astype(self.dtype)[None]
            for i, stage in enumerate(self.spec.conv_stages):
                pre = conv3d_forward(h, w[f"conv.{i}.kernel"], w[f"conv.{i}.bias"])
                act = relu_forward(pre)
                pooled, pool_winners = maxpool3d_forward(act, stage.pool)
                cache.append((h, pre, pool_winners))
                h = pooled
            pooled_shape = h.shape
            latent = h.reshape(-1)

        fc_cache = []
        h = latent
        last = len(self.spec.fcn_widths) - 1
        for i in range(last + 1):
            pre = dense_forward(h, w[f"fc.{i}.kernel"], w[f"fc.{i}.bias"])
            fc_cache.append((h, pre))
            h = relu_forward(pre) if i < last else pre
        logits = h
        loss, dh = cross_entropy(logits, label)

        for i in range(last, -1, -1):
            inp, pre = fc_cache[i]
            if i < last:
                dh = relu_backward(dh, pre)
            dh, grads[f"fc.{i}.kernel"], grads[f"fc.{i}.bias"] = dense_backward(
                dh[None], inp[None], w[f"fc.{i}.kernel"]
            )
            dh = dh[0]

        if self.family is Family.POINT_SET:
            dh = point_maxpool_backward(dh, winners, len(x))
            for i in range(len(cache) - 1, -1, -1):
                inp, pre = cache[i]
                dh = relu_backward(dh, pre)
                dh, grads[f"point.{i}.kernel"], grads[f"point.{i}.bias"] = dense_backward(
                    dh, inp, w[f"point.{i}.kernel"]
                )
        else:
            dh = dh.reshape(pooled_shape)
            for i in range(len(cache) - 1, -1, -1):
                inp, pre, pool_winners = cache[i]
                dh = maxpool3d_backward(dh, pool_winners, pre.shape, self.spec.conv_stages[i].pool)
                dh = relu_backward(dh, pre)
                dh, grads[f"conv.{i}.kernel"], grads[f"conv.{i}.bias"] = conv3d_backward(
                    dh, inp, w[f"conv.{i}.kernel"]
                )

        return loss, grads, logits


def to_model_input(spec: ModelSpec, cloud: PointCloud) -> ShapeInput:
    """Clouds feed point-set models directly; volumetric models get the voxelized cloud"""
    if spec.family is Family.POINT_SET:
        return cloud
    return voxelize(cloud, spec.resolution)
