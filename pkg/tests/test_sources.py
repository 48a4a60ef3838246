"""Tests for the dataset sources."""

import os

import pytest

from sources import OffDirectorySource, SyntheticSource
from tools.dataset import load_dataset
from tools.off_parser import OffParseError

TETRA = """OFF
4 4 0
0 0 0
1 0 0
0 1 0
0 0 1
3 0 1 2
3 0 1 3
3 0 2 3
3 1 2 3
"""


def write_tree(root, broken: bool = False):
    for class_name in ("pyramid", "wedge"):
        for split in ("train", "test"):
            folder = root / class_name / split
            folder.mkdir(parents=True)
            (folder / "a.off").write_text(TETRA)
    if broken:
        (root / "wedge" / "train" / "b.off").write_text("OFF\n3 1 0\n0 0 0\n")


def test_synthetic_source(tmp_path):
    source = SyntheticSource({"kinds": ["sphere", "cone"], "train_per_class": 2, "test_per_class": 1, "n_points": 16})
    assert source.check()
    dataset = source.load()
    assert dataset.classes == ["sphere", "cone"]
    assert len(dataset.train) == 4 and len(dataset.test) == 2
    path = source.save_to_workspace(dataset, "synth", folder=str(tmp_path))
    assert load_dataset(path).classes == ["sphere", "cone"]


def test_synthetic_source_rejects_unknown_kind():
    assert not SyntheticSource({"kinds": ["teapot"]}).check()


def test_off_source(tmp_path):
    write_tree(tmp_path)
    source = OffDirectorySource({"root": str(tmp_path), "n_points": 32, "seed": 1})
    assert source.check()
    dataset = source.load()
    assert dataset.classes == ["pyramid", "wedge"]
    assert len(dataset.train) == 2 and len(dataset.test) == 2
    assert all(len(e.input) == 32 and e.input.is_normalized() for e in dataset.train)
    assert dataset.train[0].source == os.path.join("pyramid", "train", "a.off")


def test_off_source_skips_or_raises_on_bad_meshes(tmp_path):
    write_tree(tmp_path, broken=True)
    assert len(OffDirectorySource({"root": str(tmp_path)}).load().train) == 2
    with pytest.raises(OffParseError):
        OffDirectorySource({"root": str(tmp_path), "skip_invalid": False}).load()


def test_missing_root(tmp_path):
    assert not OffDirectorySource({"root": str(tmp_path / "absent")}).check()


def test_timestamped_workspace_save(tmp_path):
    source = SyntheticSource({"kinds": ["cube"], "train_per_class": 1, "test_per_class": 0, "n_points": 16})
    path = source.save_to_workspace(source.load(), "cubes", folder=str(tmp_path), timestamped=True)
    assert os.path.basename(path).startswith("cubes_")
