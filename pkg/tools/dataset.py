"""
Datasets and On-Disk Formats

Provides the Dataset type, synthetic dataset construction, the PC3D binary
point-cloud format and the manifest-based dataset directory layout.
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .geometry import PointCloud
from .synthetic import SHAPE_KINDS, LabeledExample, synth_shape

logger = logging.getLogger(__name__)

CLOUD_MAGIC = b"PC3D"
SPLITS = ("train", "test")
MANIFEST_COLUMNS = ["path", "class_name", "split"]


class FormatError(ValueError):
    """Bad magic, truncated payload or inconsistent dataset directory"""


@dataclass(frozen=True)
class Dataset:
    """Ordered class names plus train/test example lists"""

    classes: List[str]
    train: List[LabeledExample] = field(default_factory=list)
    test: List[LabeledExample] = field(default_factory=list)

    def __post_init__(self):
        for split, examples in (("train", self.train), ("test", self.test)):
            for example in examples:
                if not 0 <= example.label < len(self.classes):
                    raise ValueError(
                        f"{split} example {example.source!r} has label {example.label} "
                        f"outside {len(self.classes)} classes"
                    )
        shared = {e.source for e in self.train} & {e.source for e in self.test}
        if shared:
            raise ValueError(f"train and test share sources: {sorted(shared)[:3]}")

    def split(self, name: str) -> List[LabeledExample]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return self.train if name == "train" else self.test


def derive_seed(*parts: int) -> int:
    """Stable 32-bit seed from a tuple of integers"""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def make_synthetic_dataset(
    kinds: Sequence[str] = SHAPE_KINDS,
    train_per_class: int = 200,
    test_per_class: int = 50,
    n_points: int = 256,
    noise_sd: float = 0.01,
    seed: int = 0,
) -> Dataset:
    """
    Build a labeled dataset of synthetic shapes.

    Labels follow the order of kinds; every example gets its own seed derived
    from (seed, class index, split index, example index).
    """
    kinds = list(kinds)
    train, test = [], []
    for label, kind in enumerate(kinds):
        for split_index, (count, bucket) in enumerate(((train_per_class, train), (test_per_class, test))):
            for i in range(count):
                example = synth_shape(kind, n_points, noise_sd, derive_seed(seed, label, split_index, i))
                bucket.append(LabeledExample(example.input, label, example.source))
    logger.info("Generated %d train / %d test synthetic examples", len(train), len(test))
    return Dataset(kinds, train, test)


def encode_cloud(pc: PointCloud) -> bytes:
    header = CLOUD_MAGIC + np.array([len(pc)], dtype="<u4").tobytes()
    return header + pc.points.astype("<f4").tobytes()


def decode_cloud(payload: bytes) -> PointCloud:
    if payload[:4] != CLOUD_MAGIC:
        raise FormatError(f"bad magic {payload[:4]!r}, expected {CLOUD_MAGIC!r}")
    if len(payload) < 8:
        raise FormatError("truncated header")
    count = int(np.frombuffer(payload, dtype="<u4", count=1, offset=4)[0])
    expected = 8 + 12 * count
    if len(payload) != expected:
        raise FormatError(f"payload holds {len(payload)} bytes, header declares {expected}")
    points = np.frombuffer(payload, dtype="<f4", offset=8).reshape(count, 3)
    return PointCloud(points.astype(np.float32))


def save_cloud(pc: PointCloud, path: str) -> str:
    """Write a cloud in PC3D format and return the path"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(encode_cloud(pc))
    return str(path)


def load_cloud(path: str) -> PointCloud:
    with open(path, "rb") as f:
        return decode_cloud(f.read())


def save_dataset(dataset: Dataset, directory: str) -> str:
    """
    Write a dataset directory: clouds, ``manifest``, ``classes`` and the
    ``provenance`` sidecar.

    Args:
        dataset: Dataset to write
        directory: Target directory (created if missing)

    Returns:
        The directory path
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)

    records, provenance = [], []
    for split in SPLITS:
        for i, example in enumerate(dataset.split(split)):
            class_name = dataset.classes[example.label]
            relative = f"clouds/{split}/{class_name}/{i:05d}.pc3d"
            save_cloud(example.input, str(root / relative))
            records.append({"path": relative, "class_name": class_name, "split": split})
            provenance.append({"path": relative, "source": example.source})

    pd.DataFrame(records, columns=MANIFEST_COLUMNS).to_csv(
        root / "manifest", sep="\t", header=False, index=False
    )
    pd.DataFrame(provenance, columns=["path", "source"]).to_csv(
        root / "provenance", sep="\t", header=False, index=False
    )
    (root / "classes").write_text("".join(f"{name}\n" for name in dataset.classes), encoding="utf-8")
    logger.info("Saved dataset with %d records to %s", len(records), root)
    return str(root)


def _read_table(path: Path, columns: List[str]) -> pd.DataFrame:
    if not path.exists() or path.stat().st_size == 0:
        return pd.DataFrame(columns=columns)
    return pd.read_csv(path, sep="\t", header=None, names=columns, dtype=str, keep_default_na=False)


def load_dataset(directory: str) -> Dataset:
    root = Path(directory)
    classes_file = root / "classes"
    if not classes_file.exists():
        raise FormatError(f"{root} has no 'classes' file")
    if not (root / "manifest").exists():
        raise FormatError(f"{root} has no 'manifest' file")
    classes = [line for line in classes_file.read_text(encoding="utf-8").splitlines() if line]
    label_of: Dict[str, int] = {name: i for i, name in enumerate(classes)}

    manifest = _read_table(root / "manifest", MANIFEST_COLUMNS)
    sources = dict(_read_table(root / "provenance", ["path", "source"]).itertuples(index=False))

    splits: Dict[str, List[LabeledExample]] = {split: [] for split in SPLITS}
    for record in manifest.itertuples(index=False):
        if record.split not in splits:
            raise FormatError(f"manifest record {record.path!r} has unknown split {record.split!r}")
        if record.class_name not in label_of:
            raise FormatError(f"manifest record {record.path!r} names unknown class {record.class_name!r}")
        cloud = load_cloud(os.path.join(root, record.path))
        source = sources.get(record.path, record.path)
        splits[record.split].append(LabeledExample(cloud, label_of[record.class_name], source))

    return Dataset(classes, splits["train"], splits["test"])


def sample_indices(count: int, sample_size: int, seed: int) -> np.ndarray:
    """Sorted uniform sample of indices without replacement"""
    if sample_size > count:
        raise ValueError(f"cannot sample {sample_size} of {count} examples")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(count, size=sample_size, replace=False))


def class_counts(examples: Sequence[LabeledExample], classes: Sequence[str]) -> Dict[str, int]:
    labels = [e.label for e in examples]
    return {name: labels.count(i) for i, name in enumerate(classes)}
