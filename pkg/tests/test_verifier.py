"""Tests for exhaustive ISO and the brute-force oracle."""

import logging
import math

import numpy as np
import pytest

from conftest import cloud_with_x, point_spec, random_cloud, random_point_network, threshold_network
from agents import (
    Goal,
    InstanceTooLarge,
    QueryCounter,
    VerificationRefused,
    brute_force_min_occlusion,
    exhaustive_verify,
    iso,
    replay_log,
)
from engine import Network, Weights, init_weights
from tools.geometry import PointCloud


def leading_dimension_network(seed: int, cloud: PointCloud, high: int, latent: int = 4):
    """
    Random point layer whose first latent dimension alone drives a two-class
    head: class 1 exactly while some point scores above the cut, which sits
    between the high-th and (high+1)-th largest first-dimension scores.
    """
    spec = point_spec(latent, classes=2)
    tensors = init_weights(spec, seed=seed).to_dict()
    kernel = tensors["point.0.kernel"].copy()
    kernel[:, 0] = np.abs(kernel[:, 0]) + 0.1
    tensors["point.0.kernel"] = kernel
    tensors["point.0.bias"] = np.zeros(latent, dtype=np.float32)
    scores = np.maximum(cloud.points.astype(np.float32) @ kernel[:, 0], 0.0)
    ranked = np.sort(scores)[::-1]
    cut = (ranked[high - 1] + ranked[high]) / 2.0
    head = np.zeros((latent, 2), dtype=np.float32)
    head[0, 1] = 1.0
    tensors["fc.0.kernel"] = head
    tensors["fc.0.bias"] = np.array([0.0, -cut], dtype=np.float32)
    return Network(spec, Weights(tensors)), scores


@pytest.mark.parametrize("seed", range(50))
def test_exhaustive_iso_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 11))
    high = min(int(rng.integers(1, 4)), (n - 2) // 4 + 1)
    cloud = random_cloud(n, seed=300 + seed)
    network, scores = leading_dimension_network(seed, cloud, high)

    result, certificate = exhaustive_verify(network, cloud)
    assert certificate.oracle_checked and certificate.oracle_size == high
    assert not certificate.counterexample, (
        f"exhaustive ISO found {certificate.found_size}, oracle {certificate.oracle_size}"
    )
    assert certificate.optimal and certificate.exhausted
    assert result.occlusion_size == high
    assert set(result.removed) == set(int(i) for i in np.argsort(-scores)[:high])
    assert network.predict(result.survivor).label != result.predicted_before.label
    assert replay_log(network, cloud, result.log).ok


@pytest.mark.parametrize("seed", range(50))
def test_every_gap_to_the_oracle_is_reported(seed):
    rng = np.random.default_rng(seed)
    classes = int(rng.integers(2, 4))
    network = random_point_network(seed, latent=4, classes=classes)
    cloud = random_cloud(int(rng.integers(4, 9)), seed=300 + seed)

    result, certificate = exhaustive_verify(network, cloud)
    oracle = brute_force_min_occlusion(network, cloud)
    assert certificate.exhausted
    assert certificate.oracle_size == oracle.min_size
    if result.goal_met:
        assert oracle.exists and result.occlusion_size >= oracle.min_size
        assert network.predict(result.survivor).label != result.predicted_before.label
        assert replay_log(network, cloud, result.log).ok
    gap = oracle.exists and (not result.goal_met or result.occlusion_size > oracle.min_size)
    assert certificate.counterexample == gap
    assert certificate.optimal == (result.goal_met and not gap)


def two_dimension_network(head_rows, cut: float) -> Network:
    """Latent (relu x, relu y); class 1 logit is head_rows . latent - cut"""
    spec = point_spec(latent=2, classes=2)
    return Network(spec, Weights({
        "point.0.kernel": np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], dtype=np.float32),
        "point.0.bias": np.zeros(2, dtype=np.float32),
        "fc.0.kernel": np.array([[0.0, head_rows[0]], [0.0, head_rows[1]]], dtype=np.float32),
        "fc.0.bias": np.array([0.0, -cut], dtype=np.float32),
    }))


def test_counterexample_is_surfaced(caplog):
    # the y-owner is the only low point, and every pass removes it with the x-owner
    network = two_dimension_network((1.0, 0.0), cut=0.6)
    cloud = PointCloud(np.array([[0.9, 0.1, 0.3], [0.8, 0.2, 0.6], [0.1, 0.9, 0.5]]))
    oracle = brute_force_min_occlusion(network, cloud)
    assert oracle.min_size == 2 and oracle.witness == (0, 1)

    with caplog.at_level(logging.WARNING, logger="agents.verifier"):
        result, certificate = exhaustive_verify(network, cloud)
    assert not result.goal_met
    assert certificate.exhausted
    assert certificate.found_size is None and certificate.oracle_size == 2
    assert certificate.counterexample and not certificate.optimal
    assert certificate.nodes_expanded == 2
    assert certificate.orderings_covered == 3
    assert "2-element occlusion exists" in caplog.text


def test_two_point_minimum():
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.85, 0.2, 0.1, 0.15, 0.05])
    oracle = brute_force_min_occlusion(network, cloud)
    assert oracle.min_size == 2
    assert oracle.witness == (0, 1)
    result, certificate = exhaustive_verify(network, cloud)
    assert result.removed == (0, 1)
    assert certificate.depth == 2
    assert certificate.nodes_expanded == 2
    assert certificate.orderings_covered == 2
    assert certificate.optimal


def test_single_critical_set_covers_every_ordering():
    network = two_dimension_network((1.0, 1.0), cut=1.3)
    cloud = PointCloud(np.array([
        [0.9, 0.1, 0.5],
        [0.1, 0.8, 0.5],
        [0.2, 0.15, 0.5],
        [0.15, 0.2, 0.5],
    ]))
    result, certificate = exhaustive_verify(network, cloud)
    assert result.goal_met and result.occlusion_size == 1
    assert certificate.nodes_expanded == 1
    assert certificate.depth == 1
    assert certificate.max_cardinality == 2
    assert certificate.orderings_covered == math.factorial(2)
    assert certificate.optimal


def test_iso_with_exhaustive_goal_counts_queries():
    counter = QueryCounter(threshold_network())
    cloud = cloud_with_x([0.9, 0.85, 0.2, 0.1, 0.15, 0.05])
    result = iso(counter, cloud, Goal(exhaustive=True, minimize=True))
    assert result.goal_met and result.removed == (0, 1)
    assert result.exhausted
    assert result.queries == counter.queries
    assert replay_log(threshold_network(), cloud, result.log).ok


def test_no_subset_misclassifies():
    spec = random_point_network(0).spec
    zero = Network(spec, Weights({name: np.zeros(shape, np.float32) for name, shape in spec.parameter_shapes().items()}))
    cloud = random_cloud(6, seed=0)
    oracle = brute_force_min_occlusion(zero, cloud)
    assert not oracle.exists
    assert oracle.queries == 2 ** 6 - 1
    result, certificate = exhaustive_verify(zero, cloud)
    assert not result.goal_met
    assert certificate.exhausted and not certificate.optimal
    assert not certificate.counterexample


def test_goal_met_without_removal():
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.1])
    assert brute_force_min_occlusion(network, cloud, Goal.targeted(1)).min_size == 0
    result, certificate = exhaustive_verify(network, cloud, Goal.targeted(1))
    assert result.removed == () and certificate.optimal


def test_oracle_can_be_skipped():
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.85, 0.2, 0.1])
    _, certificate = exhaustive_verify(network, cloud, oracle=False)
    assert not certificate.oracle_checked and certificate.oracle_size is None
    assert certificate.optimal


def test_large_critical_set_is_refused():
    network = random_point_network(1, latent=12, classes=2)
    cloud = random_cloud(40, seed=1)
    with pytest.raises(VerificationRefused) as info:
        exhaustive_verify(network, cloud, max_cardinality=2)
    assert info.value.cardinality > 2


def test_brute_force_refuses_large_inputs():
    with pytest.raises(InstanceTooLarge):
        brute_force_min_occlusion(threshold_network(), random_cloud(21, seed=0))
