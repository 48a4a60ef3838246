"""
Verification Mode

exhaustive_verify runs ISO over every Rank ordering of every critical set it
reaches and, when the input is small enough, checks the result against
brute_force_min_occlusion, which tries all 2^n - 1 subsets. A gap between
the two is reported as a counterexample in the certificate, never
smoothed over.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from engine.network import Network, ShapeInput
from .attack_log import AttackResult, survivor_mask
from .goals import Goal
from .iso_attacker import IsoAttacker
from .query_model import OcclusionSubject, QueryCounter, as_counter
from .salience import DEFAULT_VOXEL_THRESHOLD, ENUMERATION_LIMIT, VerificationRefused

logger = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 20


class InstanceTooLarge(ValueError):
    """Input too large for subset enumeration"""

    def __init__(self, size: int, limit: int = BRUTE_FORCE_LIMIT):
        self.size = size
        self.limit = limit
        super().__init__(f"{size} elements exceed the brute-force limit of {limit}; use ISO instead")


@dataclass(frozen=True)
class Certificate:
    """
    What an exhaustive ISO run covered and how it compares with the oracle.

    orderings_covered counts the Rank orderings actually run; exhausted means
    every ordering of every reached critical set was run. oracle_size is None
    when the oracle found no occlusion or was not run (oracle_checked).
    """

    nodes_expanded: int
    orderings_covered: int
    max_cardinality: int
    depth: int
    exhausted: bool
    found_size: Optional[int]
    oracle_checked: bool = False
    oracle_size: Optional[int] = None

    @property
    def counterexample(self) -> bool:
        """The oracle knows a smaller occlusion than exhaustive ISO found"""
        if not self.oracle_checked or self.oracle_size is None:
            return False
        return self.found_size is None or self.found_size > self.oracle_size

    @property
    def optimal(self) -> bool:
        return self.exhausted and self.found_size is not None and not self.counterexample


@dataclass(frozen=True)
class BruteForceResult:
    min_size: Optional[int]
    witness: Tuple[int, ...]
    queries: int

    @property
    def exists(self) -> bool:
        return self.min_size is not None



def exhaustive_verify(
    model: Union[Network, QueryCounter],
    x: ShapeInput,
    goal: Optional[Goal] = None,
    mode: str = "whitebox",
    max_cardinality: int = ENUMERATION_LIMIT,
    tolerance: float = 1e-6,
    threshold: float = DEFAULT_VOXEL_THRESHOLD,
    oracle: bool = True,
) -> Tuple[AttackResult, Certificate]:
    """
    Exhaustive ISO with an optimality certificate.

    Args:
        model: Network or QueryCounter
        x: Input to verify
        goal: Goal to reach; runs without any budget
        mode: ISO mode
        max_cardinality: Largest critical set to enumerate
        tolerance: Black-box logit tolerance
        threshold: Volumetric member fraction
        oracle: Also run brute_force_min_occlusion when the input is small enough

    Raises:
        VerificationRefused: a reachable critical set is larger than max_cardinality
    """
    goal = goal or Goal()
    goal = Goal(goal.kind, goal.target, goal.k, exhaustive=True, minimize=True)
    counter = as_counter(model)
    attacker = IsoAttacker(counter, mode=mode, tolerance=tolerance, threshold=threshold)
    result, stats = attacker.enumerate_orderings(x, goal, max_cardinality)
    result.method = "exhaustive"

    checked, oracle_size = False, None
    if oracle and result.n_elements <= BRUTE_FORCE_LIMIT:
        reference = brute_force_min_occlusion(counter, x, goal)
        checked, oracle_size = True, reference.min_size

    certificate = Certificate(
        nodes_expanded=stats.nodes_expanded,
        orderings_covered=stats.orderings_covered,
        max_cardinality=stats.max_cardinality,
        depth=stats.depth,
        exhausted=stats.complete,
        found_size=result.occlusion_size if result.goal_met else None,
        oracle_checked=checked,
        oracle_size=oracle_size,
    )
    if certificate.counterexample:
        logger.warning(
            "Exhaustive ISO found %s but a %d-element occlusion exists",
            certificate.found_size if certificate.found_size is not None else "no occlusion",
            oracle_size,
        )
    return result, certificate


def brute_force_min_occlusion(
    model: Union[Network, QueryCounter],
    x: ShapeInput,
    goal: Optional[Goal] = None,
    max_size: int = BRUTE_FORCE_LIMIT,
) -> BruteForceResult:
    """
    Smallest removal set meeting the goal, by enumerating subsets in order of
    increasing size (at least one element always survives).

    Raises:
        InstanceTooLarge: the input has more than max_size elements
    """
    goal = goal or Goal()
    counter = as_counter(model)
    subject = OcclusionSubject(x)
    n = len(subject)
    if n > max_size:
        raise InstanceTooLarge(n, max_size)
    start_queries = counter.queries

    reference = counter.forward(x)
    original = reference.prediction()
    if goal.is_met(original, reference, reference):
        return BruteForceResult(0, (), counter.queries - start_queries)

    for size in range(1, n):
        for witness in itertools.combinations(range(n), size):
            trace = counter.forward(subject.build(survivor_mask(n, witness)))
            if goal.is_met(original, reference, trace):
                return BruteForceResult(size, witness, counter.queries - start_queries)
    return BruteForceResult(None, (), counter.queries - start_queries)
