"""
Random occlusion baseline: remove elements in a seeded random order until
the prediction changes.
"""

import logging
import time
from typing import Union

import numpy as np

from engine.network import Network, ShapeInput
from .attack_log import AttackResult, EventLog
from .query_model import OcclusionSubject, QueryCounter, as_counter

logger = logging.getLogger(__name__)


def random_occlusion(model: Union[Network, QueryCounter], x: ShapeInput, seed: int = 0) -> AttackResult:
    """
    Remove elements in a uniform random order until misclassification or
    one element remains.

    Args:
        model: Network or QueryCounter
        x: Input to occlude
        seed: Seed of the removal order

    Returns:
        AttackResult; goal_met is False when the prediction never changed
    """
    counter = as_counter(model)
    counter.network.check_input(x)
    started, start_queries = time.perf_counter(), counter.queries
    subject = OcclusionSubject(x)
    n = len(subject)
    log = EventLog()

    reference = counter.forward(x)
    original = reference.prediction()
    y = original.label
    order = np.random.default_rng(seed).permutation(n)

    mask = subject.full_mask()
    trace = reference
    removed = []
    for element in order[: n - 1]:
        mask = subject.without(mask, element)
        candidate = counter.forward(subject.build(mask))
        log.add("remove", element, trace.probs[y], candidate.probs[y], candidate.predicted_class)
        trace = candidate
        removed.append(int(element))
        if trace.predicted_class != y:
            break

    return AttackResult(
        survivor=subject.build(mask),
        removed=tuple(removed),
        n_elements=n,
        queries=counter.queries - start_queries,
        elapsed=time.perf_counter() - started,
        goal_met=trace.predicted_class != y,
        predicted_before=original,
        predicted_after=trace.prediction(),
        method="random",
        log=log.events,
    )
