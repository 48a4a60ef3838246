"""Tests for the ISO attack, its log and the random baseline."""

import time

import numpy as np
import pytest

from conftest import cloud_with_x, random_cloud, random_point_network, threshold_network
from agents import Goal, IsoAttacker, LogEvent, QueryCounter, iso, load_log, random_occlusion, replay_log
from agents.query_model import OcclusionSubject
from engine import Network, init_weights, to_model_input
from tools.geometry import normalize_unit_cube


def test_goal_already_met_costs_one_query():
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.1, 0.2])
    result = iso(network, cloud, Goal.targeted(1))
    assert result.goal_met
    assert result.removed == ()
    assert result.queries == 1
    assert result.survivor == cloud


@pytest.mark.parametrize("mode", ["whitebox", "blackbox"])
def test_designated_point_is_the_whole_occlusion(mode):
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.1, 0.2, 0.25, 0.05, 0.15])
    result = iso(network, cloud, Goal(), mode=mode)
    assert result.goal_met
    assert result.removed == (0,)
    assert result.predicted_before.label == 1
    assert result.predicted_after.label == 0
    assert len(result.survivor) == 5
    assert result.method == ("iso" if mode == "whitebox" else "iso-blackbox")


def test_chained_removals_then_restoration_pass():
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.85, 0.2, 0.1, 0.15, 0.05])
    result = iso(network, cloud, Goal())
    assert result.goal_met
    assert result.removed == (0, 1)
    actions = [(e.action, e.element_index) for e in result.log]
    assert actions == [("remove", 0), ("remove", 1)]
    assert replay_log(network, cloud, result.log).ok


def test_unreachable_goal_exhausts_the_ranking_space():
    network = threshold_network()
    cloud = cloud_with_x([0.3, 0.1, 0.2])
    result = iso(network, cloud, Goal.targeted(1))
    assert not result.goal_met
    assert result.exhausted
    assert result.predicted_after.label == 0


@pytest.mark.parametrize("seed", range(8))
def test_random_instances_replay_and_stay_subsets(seed):
    network = random_point_network(seed, latent=6, classes=3)
    cloud = random_cloud(20, seed=50 + seed)
    goal = Goal(max_restarts=3)
    result = iso(network, cloud, goal, seed=seed)

    removed = set(result.removed)
    assert len(removed) == len(result.removed)
    assert len(result.survivor) + result.occlusion_size == len(cloud)
    assert len(result.survivor) >= 1
    kept = {tuple(p) for p in result.survivor.points}
    assert kept <= {tuple(p) for p in cloud.points}
    assert result.predicted_after == network.predict(result.survivor)
    if result.goal_met:
        assert result.predicted_after.label != result.predicted_before.label
    assert replay_log(network, cloud, result.log, goal).ok


def test_tampered_log_fails_replay():
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.85, 0.2, 0.1, 0.15, 0.05])
    log = iso(network, cloud, Goal()).log
    tampered = [LogEvent(e.step, e.action, e.element_index, e.confidence_before, 0.5, e.predicted_class) for e in log]
    assert not replay_log(network, cloud, tampered).ok


def test_queries_are_counted_and_budgeted():
    network = random_point_network(2, latent=8, classes=3)
    cloud = random_cloud(30, seed=2)
    counter = QueryCounter(network)
    result = IsoAttacker(counter).attack(cloud, Goal.confidence_drop(0.999, budget_queries=7))
    assert result.queries == counter.queries
    assert result.queries <= 7


def test_minimize_never_returns_a_larger_occlusion():
    network = random_point_network(5, latent=6, classes=2)
    cloud = random_cloud(16, seed=5)
    first = iso(network, cloud, Goal(max_restarts=6))
    best = iso(network, cloud, Goal(max_restarts=6, minimize=True))
    if first.goal_met:
        assert best.goal_met
        assert best.occlusion_size <= first.occlusion_size


def test_volumetric_attack(tiny_voxel_spec):
    network = Network(tiny_voxel_spec, init_weights(tiny_voxel_spec, seed=4))
    grid = to_model_input(tiny_voxel_spec, normalize_unit_cube(random_cloud(40, seed=4)))
    goal = Goal(max_restarts=2)
    result = iso(network, grid, goal, mode="whitebox", threshold=0.25)
    subject = OcclusionSubject(grid)
    cells = {tuple(c) for c in subject.cells}
    survivors = {tuple(c) for c in result.survivor.occupied_cells()}
    assert survivors <= cells
    assert len(survivors) + result.occlusion_size == len(cells)
    assert replay_log(network, grid, result.log, goal).ok


def test_log_round_trip(tmp_path):
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.85, 0.2, 0.1, 0.15, 0.05])
    result = iso(network, cloud, Goal())
    path = result.save_log(str(tmp_path / "log.csv"))
    loaded = load_log(path)
    assert [(e.step, e.action, e.element_index, e.predicted_class) for e in loaded] == [
        (e.step, e.action, e.element_index, e.predicted_class) for e in result.log
    ]
    assert [e.confidence_after for e in loaded] == pytest.approx([e.confidence_after for e in result.log])


def test_goal_validation():
    with pytest.raises(ValueError):
        Goal.targeted(None)
    with pytest.raises(ValueError):
        Goal.confidence_drop(1.5)
    with pytest.raises(ValueError):
        Goal(exhaustive=True, budget_seconds=1.0)
    with pytest.raises(ValueError):
        IsoAttacker(threshold_network(), mode="greybox")


def test_random_baseline_stops_at_misclassification():
    network = threshold_network()
    cloud = cloud_with_x([0.9, 0.1, 0.2, 0.25, 0.05, 0.15])
    result = random_occlusion(network, cloud, seed=0)
    assert result.goal_met
    assert result.removed[-1] == 0
    assert result.queries == result.occlusion_size + 1
    again = random_occlusion(network, cloud, seed=0)
    assert again.removed == result.removed


def test_random_baseline_keeps_one_element():
    network = threshold_network()
    cloud = cloud_with_x([0.3, 0.1, 0.2])
    result = random_occlusion(network, cloud, seed=1)
    assert not result.goal_met
    assert len(result.survivor) == 1


def slowest(action, repeats: int = 5) -> float:
    durations = []
    for _ in range(repeats):
        started = time.perf_counter()
        action()
        durations.append(time.perf_counter() - started)
    return max(durations)


@pytest.mark.parametrize("mode", ["whitebox", "blackbox"])
def test_time_budget_is_anytime(mode):
    network = random_point_network(6, latent=16, classes=3)
    cloud = random_cloud(128, seed=6)
    attacker = IsoAttacker(network, mode=mode)
    trace = network.forward(cloud)
    step = slowest(lambda: attacker.critical_set(cloud, trace)) + slowest(lambda: network.forward(cloud))

    rng = np.random.default_rng(6)
    for i in range(200):
        budget = float(rng.uniform(0.002, 0.02))
        x = random_cloud(128, seed=1000 + i)
        result = attacker.attack(x, Goal.confidence_drop(0.999, budget_seconds=budget))
        # Past the deadline at most one critical set and one forward pass run
        assert result.elapsed - budget <= 3.0 * step + 0.01, f"attack {i} overran by {result.elapsed - budget:.4f}s"
        assert len(result.survivor) + result.occlusion_size == len(x)
