"""Tests for synthetic shapes and the on-disk dataset format."""

import numpy as np
import pytest

from tools.dataset import (
    Dataset,
    FormatError,
    class_counts,
    decode_cloud,
    derive_seed,
    encode_cloud,
    load_cloud,
    load_dataset,
    make_synthetic_dataset,
    sample_indices,
    save_cloud,
    save_dataset,
)
from tools.geometry import PointCloud
from tools.synthetic import SHAPE_KINDS, LabeledExample, UnknownShapeError, synth_shape


@pytest.mark.parametrize("kind", SHAPE_KINDS)
def test_synth_shape_is_normalized_and_labeled(kind):
    example = synth_shape(kind, 128, noise_sd=0.01, seed=1)
    assert len(example.input) == 128
    assert example.input.is_normalized()
    assert example.label == SHAPE_KINDS.index(kind)


def test_synth_shape_is_deterministic():
    a = synth_shape("torus", 64, 0.02, seed=5)
    b = synth_shape("torus", 64, 0.02, seed=5)
    c = synth_shape("torus", 64, 0.02, seed=6)
    assert a.input == b.input
    assert a.input != c.input


def test_sphere_points_share_a_radius():
    points = synth_shape("sphere", 256, 0.0, seed=2).input.points.astype(np.float64)
    # |p - c|^2 = r^2 is linear in (c, r^2 - |c|^2)
    system = np.hstack([2.0 * points, np.ones((len(points), 1))])
    solution, *_ = np.linalg.lstsq(system, (points ** 2).sum(axis=1), rcond=None)
    distances = np.linalg.norm(points - solution[:3], axis=1)
    assert np.all(np.abs(distances - distances.mean()) < 1e-6)


def test_cube_points_lie_on_bounding_faces():
    points = synth_shape("cube", 256, 0.0, seed=3).input.points.astype(np.float64)
    lower, upper = points.min(axis=0), points.max(axis=0)
    gaps = np.minimum(np.abs(points - lower), np.abs(points - upper)).min(axis=1)
    assert np.all(gaps < 1e-6)


def test_unknown_kind_and_bad_sizes():
    with pytest.raises(UnknownShapeError):
        synth_shape("teapot", 64)
    with pytest.raises(ValueError):
        synth_shape("cube", 4)
    with pytest.raises(ValueError):
        synth_shape("cube", 64, noise_sd=-1.0)


def test_dataset_round_trip(tmp_path, tiny_dataset):
    save_dataset(tiny_dataset, str(tmp_path / "data"))
    loaded = load_dataset(str(tmp_path / "data"))
    assert loaded.classes == tiny_dataset.classes
    for split in ("train", "test"):
        original, restored = tiny_dataset.split(split), loaded.split(split)
        assert [e.label for e in restored] == [e.label for e in original]
        assert [e.source for e in restored] == [e.source for e in original]
        assert all(a.input == b.input for a, b in zip(original, restored))


def test_empty_test_split_round_trips(tmp_path):
    dataset = make_synthetic_dataset(("cone",), train_per_class=2, test_per_class=0, n_points=16)
    save_dataset(dataset, str(tmp_path))
    assert load_dataset(str(tmp_path)).test == []


def test_cloud_file_round_trip(tmp_path):
    cloud = PointCloud(np.random.default_rng(0).uniform(size=(10, 3)))
    path = save_cloud(cloud, str(tmp_path / "a.pc3d"))
    assert load_cloud(path) == cloud


def test_cloud_decoding_rejects_corruption():
    payload = encode_cloud(PointCloud([[0.1, 0.2, 0.3]]))
    with pytest.raises(FormatError):
        decode_cloud(b"XXXX" + payload[4:])
    with pytest.raises(FormatError):
        decode_cloud(payload[:-2])


def test_missing_classes_file(tmp_path):
    with pytest.raises(FormatError):
        load_dataset(str(tmp_path))


def test_dataset_validates_labels_and_sources():
    cloud = PointCloud([[0.0, 0.0, 0.0]])
    with pytest.raises(ValueError):
        Dataset(["a"], train=[LabeledExample(cloud, 1, "s")])
    with pytest.raises(ValueError):
        Dataset(["a"], train=[LabeledExample(cloud, 0, "s")], test=[LabeledExample(cloud, 0, "s")])


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(2, 1)


def test_sample_indices():
    sample = sample_indices(100, 10, seed=3)
    assert len(np.unique(sample)) == 10
    assert list(sample) == sorted(sample)
    np.testing.assert_array_equal(sample, sample_indices(100, 10, seed=3))
    with pytest.raises(ValueError):
        sample_indices(5, 6, seed=0)


def test_class_counts(tiny_dataset):
    assert class_counts(tiny_dataset.train, tiny_dataset.classes) == {"sphere": 3, "cube": 3}
