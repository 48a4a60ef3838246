"""Tests for SGD training."""

import numpy as np
import pytest

from conftest import point_spec
from engine import Network, TrainingConfig, TrainingDivergedError, accuracy, default_point_spec, init_weights, train
from tools.dataset import Dataset, make_synthetic_dataset


def test_zero_learning_rate_leaves_weights_unchanged(tiny_dataset):
    spec = point_spec(latent=8, classes=2)
    initial = init_weights(spec, seed=3)
    single = Dataset(tiny_dataset.classes, train=tiny_dataset.train[:1])
    result = train(spec, single, TrainingConfig(epochs=1, batch_size=1, learning_rate=0.0), initial, progress=False)
    for name in initial:
        np.testing.assert_array_equal(result.weights[name], initial[name])


def test_training_is_deterministic(tiny_dataset):
    spec = point_spec(latent=8, classes=2, hidden=(8,))
    hyper = TrainingConfig(epochs=2, batch_size=4, learning_rate=0.05, seed=9)
    a = train(spec, tiny_dataset, hyper, progress=False)
    b = train(spec, tiny_dataset, hyper, progress=False)
    for name in a.weights:
        np.testing.assert_array_equal(a.weights[name], b.weights[name])
    assert [r.loss for r in a.history] == [r.loss for r in b.history]


def test_history_records_every_epoch(tmp_path, tiny_dataset):
    spec = point_spec(latent=8, classes=2)
    result = train(spec, tiny_dataset, TrainingConfig(epochs=3, batch_size=2), progress=False)
    frame = result.history_frame()
    assert list(frame["epoch"]) == [1, 2, 3]
    assert frame["test_accuracy"].between(0, 1).all()
    path = result.save_history(str(tmp_path / "history.csv"))
    assert open(path).readline().strip() == "epoch,loss,train_accuracy,test_accuracy"


def test_volumetric_training_runs(tiny_voxel_spec):
    dataset = make_synthetic_dataset(("sphere", "cube", "cone"), train_per_class=2, test_per_class=1, n_points=32)
    result = train(tiny_voxel_spec, dataset, TrainingConfig(epochs=1, batch_size=3), progress=False)
    assert len(result.history) == 1


def test_divergence_is_reported(tiny_dataset):
    spec = point_spec(latent=8, classes=2)
    with pytest.raises(TrainingDivergedError) as info:
        train(spec, tiny_dataset, TrainingConfig(epochs=3, batch_size=1, learning_rate=1e30), progress=False)
    assert info.value.epoch >= 1


def test_bad_hyperparameters_and_data(tiny_dataset):
    with pytest.raises(ValueError):
        TrainingConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainingConfig(momentum=1.0)
    with pytest.raises(ValueError):
        train(point_spec(), Dataset(["a", "b"]), progress=False)
    with pytest.raises(ValueError):
        train(point_spec(classes=1), tiny_dataset, progress=False)


@pytest.mark.slow
def test_desk_model_reaches_ninety_percent():
    dataset = make_synthetic_dataset(train_per_class=200, test_per_class=50, n_points=256, seed=0)
    spec = default_point_spec(len(dataset.classes))
    result = train(spec, dataset, TrainingConfig(epochs=50), progress=False)
    network = Network(spec, result.weights)
    test_accuracy = accuracy(network, [e.input for e in dataset.test], [e.label for e in dataset.test])
    assert test_accuracy >= 0.9
