"""Tests for the weight file format and spec sidecar."""

import numpy as np
import pytest

from conftest import point_spec, random_cloud
from engine import ModelSpec, Network, Weights, WeightsFormatError, WeightsShapeError, init_weights, load_weights, save_weights
from engine.weights import decode_weights


def test_round_trip_is_bit_identical(tmp_path, tiny_voxel_spec):
    for spec in (point_spec(latent=8, classes=3, hidden=(4,)), tiny_voxel_spec):
        weights = init_weights(spec, seed=11)
        path = save_weights(weights, str(tmp_path / f"{spec.family.value}.w3dr"), spec)
        loaded_spec, loaded = load_weights(path)
        assert loaded_spec == spec
        assert list(loaded) == list(weights)
        for name in weights:
            np.testing.assert_array_equal(loaded[name], weights[name])


def test_loaded_model_predicts_identically(tmp_path):
    spec = point_spec(latent=8, classes=3)
    weights = init_weights(spec, seed=2)
    path = save_weights(weights, str(tmp_path / "m.w3dr"), spec)
    cloud = random_cloud(20, seed=0)
    before = Network(spec, weights).forward(cloud)
    after = Network(*load_weights(path)).forward(cloud)
    np.testing.assert_array_equal(before.logits, after.logits)


def test_shape_mismatch_names_the_tensor(tmp_path):
    spec = point_spec(latent=8, classes=3)
    path = save_weights(init_weights(spec), str(tmp_path / "m.w3dr"))
    with pytest.raises(WeightsShapeError) as info:
        load_weights(path, point_spec(latent=6, classes=3))
    assert info.value.name == "point.0.kernel"
    assert info.value.expected == (3, 6)
    assert info.value.actual == (3, 8)


def test_missing_and_extra_tensors():
    spec = point_spec(latent=4, classes=2)
    tensors = init_weights(spec).to_dict()
    del tensors["fc.0.bias"]
    with pytest.raises(WeightsShapeError):
        Weights(tensors).validate(spec)
    tensors = init_weights(spec).to_dict()
    tensors["stray"] = np.zeros(1)
    with pytest.raises(WeightsShapeError):
        Weights(tensors).validate(spec)


def test_corrupt_files_are_rejected(tmp_path):
    spec = point_spec(latent=4, classes=2)
    path = save_weights(init_weights(spec), str(tmp_path / "m.w3dr"), spec)
    payload = open(path, "rb").read()
    with pytest.raises(WeightsFormatError):
        decode_weights(b"NOPE" + payload[4:])
    with pytest.raises(WeightsFormatError):
        decode_weights(payload[:-3])
    with pytest.raises(WeightsFormatError):
        decode_weights(payload + b"\x00")


def test_spec_text_round_trip(tiny_voxel_spec):
    named = ModelSpec(
        family="point-set", class_count=2, point_widths=(3, 5), fcn_widths=(4, 2), class_names=("a", "b")
    )
    for spec in (named, tiny_voxel_spec):
        assert ModelSpec.from_text(spec.to_text()) == spec


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(family="point-set", class_count=3, point_widths=(3, 4), fcn_widths=(2,))
    with pytest.raises(ValueError):
        ModelSpec(family="point-set", class_count=2, point_widths=(2, 4), fcn_widths=(2,))
    with pytest.raises(ValueError):
        ModelSpec(family="volumetric", class_count=2, resolution=4, fcn_widths=(2,))


def test_weights_are_read_only():
    weights = init_weights(point_spec())
    with pytest.raises(ValueError):
        weights["fc.0.kernel"][0, 0] = 1.0
