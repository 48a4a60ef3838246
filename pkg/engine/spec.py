"""
Model Specifications

Architecture descriptions for the two pipeline families, both read as
Data -> Latent Translation -> Pooling -> FCN:

- point-set: shared per-point MLP, elementwise max over points, FCN
- volumetric: (3D conv, ReLU, 3D max-pool) stages, flatten, FCN
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple


class Family(str, Enum):
    POINT_SET = "point-set"
    VOLUMETRIC = "volumetric"


@dataclass(frozen=True)
class ConvStage:
    """One volumetric stage: conv (same padding, stride 1), ReLU, max-pool"""

    filters: int
    kernel: int = 3
    pool: int = 2


@dataclass(frozen=True)
class ModelSpec:
    """
    Architecture of a classifier.

    point_widths includes the input width 3, so (3, 32, 64) means two shared
    per-point layers and a 64-dimensional pooled latent. fcn_widths lists the
    output width of every dense layer; the last one equals class_count.
    """

    family: Family
    class_count: int
    fcn_widths: Tuple[int, ...]
    point_widths: Tuple[int, ...] = ()
    conv_stages: Tuple[ConvStage, ...] = ()
    resolution: int = 0
    class_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "fcn_widths", tuple(int(w) for w in self.fcn_widths))
        object.__setattr__(self, "point_widths", tuple(int(w) for w in self.point_widths))
        object.__setattr__(self, "conv_stages", tuple(self.conv_stages))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        self.validate()

    def validate(self):
        if self.class_count < 1:
            raise ValueError("class_count must be positive")
        if not self.fcn_widths or any(w <= 0 for w in self.fcn_widths):
            raise ValueError("FCN widths must be positive")
        if self.fcn_widths[-1] != self.class_count:
            raise ValueError(f"final FCN width {self.fcn_widths[-1]} differs from class_count {self.class_count}")
        if self.class_names and len(self.class_names) != self.class_count:
            raise ValueError("class_names length differs from class_count")
        if self.family is Family.POINT_SET:
            if len(self.point_widths) < 2 or self.point_widths[0] != 3:
                raise ValueError("point_widths must start at 3 and hold at least one layer")
            if any(w <= 0 for w in self.point_widths):
                raise ValueError("point widths must be positive")
        else:
            if self.resolution < 2:
                raise ValueError("volumetric models need a resolution of at least 2")
            if not self.conv_stages:
                raise ValueError("volumetric models need at least one conv stage")
            size = self.resolution
            for stage in self.conv_stages:
                if stage.filters <= 0 or stage.kernel <= 0 or stage.kernel % 2 == 0 or stage.pool <= 0:
                    raise ValueError(f"invalid conv stage {stage}")
                size //= stage.pool
                if size < 1:
                    raise ValueError("conv stages pool the grid below one cell")

    @property
    def latent_dim(self) -> int:
        """Width of the pooled latent vector fed to the FCN"""
        if self.family is Family.POINT_SET:
            return self.point_widths[-1]
        size = self.resolution
        for stage in self.conv_stages:
            size //= stage.pool
        return self.conv_stages[-1].filters * size ** 3

    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Expected shape of every named tensor, in layer order"""
        shapes: Dict[str, Tuple[int, ...]] = {}
        if self.family is Family.POINT_SET:
            for i, (fan_in, fan_out) in enumerate(zip(self.point_widths[:-1], self.point_widths[1:])):
                shapes[f"point.{i}.kernel"] = (fan_in, fan_out)
                shapes[f"point.{i}.bias"] = (fan_out,)
        else:
            channels = 1
            for i, stage in enumerate(self.conv_stages):
                k = stage.kernel
                shapes[f"conv.{i}.kernel"] = (stage.filters, channels, k, k, k)
                shapes[f"conv.{i}.bias"] = (stage.filters,)
                channels = stage.filters
        fan_in = self.latent_dim
        for i, fan_out in enumerate(self.fcn_widths):
            shapes[f"fc.{i}.kernel"] = (fan_in, fan_out)
            shapes[f"fc.{i}.bias"] = (fan_out,)
            fan_in = fan_out
        return shapes

    def to_text(self) -> str:
        """Plain-text sidecar form (one key: value per line)"""
        lines = [
            f"family: {self.family.value}",
            f"class_count: {self.class_count}",
            f"fcn_widths: {','.join(map(str, self.fcn_widths))}",
        ]
        if self.family is Family.POINT_SET:
            lines.append(f"point_widths: {','.join(map(str, self.point_widths))}")
        else:
            lines.append(f"resolution: {self.resolution}")
            stages = ";".join(f"{s.filters}x{s.kernel}/{s.pool}" for s in self.conv_stages)
            lines.append(f"conv_stages: {stages}")
        if self.class_names:
            lines.append(f"class_names: {','.join(self.class_names)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ModelSpec":
        fields: Dict[str, str] = {}
        for raw in text.splitlines():
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            key, sep, value = raw.partition(":")
            if not sep:
                raise ValueError(f"malformed spec line {raw!r}")
            fields[key.strip()] = value.strip()

        def ints(key: str) -> Tuple[int, ...]:
            value = fields.get(key, "")
            return tuple(int(v) for v in value.split(",") if v)

        stages: List[ConvStage] = []
        for chunk in filter(None, fields.get("conv_stages", "").split(";")):
            filters, rest = chunk.split("x")
            kernel, pool = rest.split("/")
            stages.append(ConvStage(int(filters), int(kernel), int(pool)))
        names = tuple(n for n in fields.get("class_names", "").split(",") if n)
        return cls(
            family=Family(fields["family"]),
            class_count=int(fields["class_count"]),
            fcn_widths=ints("fcn_widths"),
            point_widths=ints("point_widths"),
            conv_stages=tuple(stages),
            resolution=int(fields.get("resolution", 0)),
            class_names=names,
        )


def default_point_spec(class_count: int = 5, latent_dim: int = 64, class_names: Optional[Tuple[str, ...]] = None) -> ModelSpec:
    """Desk point-set architecture: 3 -> 32 -> latent, FCN latent -> 32 -> classes"""
    return ModelSpec(
        family=Family.POINT_SET,
        class_count=class_count,
        point_widths=(3, 32, latent_dim),
        fcn_widths=(32, class_count),
        class_names=tuple(class_names or ()),
    )


def default_voxel_spec(class_count: int = 5, resolution: int = 16, class_names: Optional[Tuple[str, ...]] = None) -> ModelSpec:
    """Desk volumetric architecture: two (8 filters, 3^3 kernel, 2^3 pool) stages, FCN -> 32 -> classes"""
    return ModelSpec(
        family=Family.VOLUMETRIC,
        class_count=class_count,
        conv_stages=(ConvStage(8, 3, 2), ConvStage(8, 3, 2)),
        resolution=resolution,
        fcn_widths=(32, class_count),
        class_names=tuple(class_names or ()),
    )
