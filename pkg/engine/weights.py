"""
Named weight tensors: initialization, validation and the W3DR file format.

File layout (little-endian): magic "W3DR", u32 version (=1), u32 tensor
count; per tensor: u16 name length, UTF-8 name, u8 rank, rank x u32 dims,
row-major f32 data. A plain-text sidecar ``<path>.spec`` holds the ModelSpec.
"""

import logging
import struct
from pathlib import Path
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from .spec import ModelSpec

logger = logging.getLogger(__name__)

WEIGHTS_MAGIC = b"W3DR"
WEIGHTS_VERSION = 1


class WeightsShapeError(ValueError):
    """A tensor is missing or its shape disagrees with the ModelSpec"""

    def __init__(self, name: str, expected: Optional[Tuple[int, ...]], actual: Optional[Tuple[int, ...]]):
        self.name = name
        self.expected = expected
        self.actual = actual
        super().__init__(f"tensor {name!r}: expected shape {expected}, got {actual}")


class WeightsFormatError(ValueError):
    """Bad magic, unsupported version or truncated weight file"""


class Weights(Mapping[str, np.ndarray]):
    """Immutable mapping from tensor name to array"""

    def __init__(self, tensors: Mapping[str, np.ndarray]):
        self._tensors: Dict[str, np.ndarray] = {}
        for name, value in tensors.items():
            array = np.array(value, copy=True)
            array.setflags(write=False)
            self._tensors[name] = array

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self._tensors.values())).dtype if self._tensors else np.dtype(np.float32)

    def validate(self, spec: ModelSpec):
        """Raise WeightsShapeError unless every spec tensor is present with the right shape"""
        expected = spec.parameter_shapes()
        for name, shape in expected.items():
            if name not in self._tensors:
                raise WeightsShapeError(name, shape, None)
            if self._tensors[name].shape != shape:
                raise WeightsShapeError(name, shape, self._tensors[name].shape)
        for name in self._tensors:
            if name not in expected:
                raise WeightsShapeError(name, None, self._tensors[name].shape)
        for name, value in self._tensors.items():
            if not np.all(np.isfinite(value)):
                raise ValueError(f"tensor {name!r} holds non-finite values")

    def astype(self, dtype) -> "Weights":
        return Weights({name: value.astype(dtype) for name, value in self._tensors.items()})

    def to_dict(self) -> Dict[str, np.ndarray]:
        """Writable copies of every tensor"""
        return {name: value.copy() for name, value in self._tensors.items()}


def init_weights(spec: ModelSpec, seed: int = 0, dtype=np.float32) -> Weights:
    """
    Fan-in scaled uniform initialization: kernels ~ U(-sqrt(6/fan_in),
    sqrt(6/fan_in)), biases zero.
    """
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in spec.parameter_shapes().items():
        if name.endswith(".bias"):
            tensors[name] = np.zeros(shape, dtype=dtype)
            continue
        fan_in = int(np.prod(shape[1:])) if name.startswith("conv.") else shape[0]
        limit = np.sqrt(6.0 / fan_in)
        tensors[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
    return Weights(tensors)


def spec_path_for(path: str) -> str:
    return f"{path}.spec"


def save_weights(weights: Weights, path: str, spec: Optional[ModelSpec] = None) -> str:
    """
    Write weights (and the spec sidecar when a spec is given).

    Returns:
        The weight file path
    """
    chunks = [WEIGHTS_MAGIC, struct.pack("<II", WEIGHTS_VERSION, len(weights))]
    for name, value in weights.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
        chunks.append(struct.pack("<B", value.ndim) + struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype="<f4").tobytes())

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(b"".join(chunks))
    if spec is not None:
        Path(spec_path_for(path)).write_text(spec.to_text(), encoding="utf-8")
    logger.debug("Saved %d tensors to %s", len(weights), path)
    return str(path)


def _take(payload: bytes, offset: int, size: int) -> Tuple[bytes, int]:
    if offset + size > len(payload):
        raise WeightsFormatError(f"truncated weight file at byte {offset}")
    return payload[offset:offset + size], offset + size


def decode_weights(payload: bytes) -> Weights:
    if payload[:4] != WEIGHTS_MAGIC:
        raise WeightsFormatError(f"bad magic {payload[:4]!r}, expected {WEIGHTS_MAGIC!r}")
    header, offset = _take(payload, 4, 8)
    version, count = struct.unpack("<II", header)
    if version != WEIGHTS_VERSION:
        raise WeightsFormatError(f"unsupported weight file version {version}")

    tensors = {}
    for _ in range(count):
        raw, offset = _take(payload, offset, 2)
        (name_length,) = struct.unpack("<H", raw)
        raw, offset = _take(payload, offset, name_length)
        name = raw.decode("utf-8")
        raw, offset = _take(payload, offset, 1)
        (rank,) = struct.unpack("<B", raw)
        raw, offset = _take(payload, offset, 4 * rank)
        shape = struct.unpack(f"<{rank}I", raw)
        raw, offset = _take(payload, offset, 4 * int(np.prod(shape, dtype=np.int64)))
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)
    if offset != len(payload):
        raise WeightsFormatError(f"{len(payload) - offset} trailing bytes after {count} tensors")
    return Weights(tensors)


def load_spec(path: str) -> ModelSpec:
    """Read the spec sidecar stored beside a weight file"""
    return ModelSpec.from_text(Path(spec_path_for(path)).read_text(encoding="utf-8"))


def load_weights(path: str, spec: Optional[ModelSpec] = None) -> Tuple[ModelSpec, Weights]:
    """
    Read a weight file and check it against its spec.

    Args:
        path: Weight file path
        spec: Spec to validate against; read from the sidecar when omitted

    Returns:
        (spec, weights)
    """
    with open(path, "rb") as f:
        weights = decode_weights(f.read())
    if spec is None:
        spec = load_spec(path)
    weights.validate(spec)
    return spec, weights
