"""
Critical Sets and Rank

An element is critical when removing it changes the latent representation.
White-box mode reads the forward trace; black-box mode removes every element
once and watches the logits. Rank turns a critical set into removal
orderings without ever repeating one.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple

import numpy as np
import pandas as pd

from engine.network import ForwardTrace, ShapeInput
from engine.spec import Family
from .query_model import OcclusionSubject, QueryCounter

logger = logging.getLogger(__name__)

# Above this cardinality Rank switches from enumeration to seeded shuffles
ENUMERATION_LIMIT = 8
MAX_SHUFFLE_RETRIES = 32
DEFAULT_VOXEL_THRESHOLD = 0.25
SCORES = ("count", "logit")
SALIENCE_COLUMNS = ["index", "x", "y", "z", "saliency", "is_member"]


class RankExhausted(Exception):
    """Every ordering of the critical set has been emitted"""


class VerificationRefused(Exception):
    """A critical set too large to enumerate was met"""

    def __init__(self, cardinality: int, limit: int = ENUMERATION_LIMIT):
        self.cardinality = cardinality
        self.limit = limit
        super().__init__(f"critical set of {cardinality} elements exceeds the enumeration limit {limit}")


@dataclass(frozen=True, eq=False)
class CriticalSet:
    """
    Members (element indices of the input the set was computed on) plus a
    saliency score for every element of that input; non-members score 0 in
    point-set mode.
    """

    members: np.ndarray
    scores: np.ndarray
    threshold: Optional[float] = None

    def __len__(self) -> int:
        return len(self.members)

    @property
    def saliency(self) -> np.ndarray:
        return self.scores[self.members]

    def is_member(self) -> np.ndarray:
        flags = np.zeros(len(self.scores), dtype=bool)
        flags[self.members] = True
        return flags

    def member_set(self) -> FrozenSet[int]:
        return frozenset(int(m) for m in self.members)


def latent_equal(l1: np.ndarray, l2: np.ndarray, tol: float = 0.0) -> bool:
    """Elementwise |l1 - l2| <= tol"""
    l1, l2 = np.asarray(l1), np.asarray(l2)
    if l1.shape != l2.shape:
        return False
    return bool(np.all(np.abs(l1.astype(np.float64) - l2.astype(np.float64)) <= tol))


def top_fraction(scores: np.ndarray, threshold: float) -> np.ndarray:
    """Indices of the ceil(threshold * m) highest scores, ties to the lower index, sorted"""
    m = len(scores)
    count = min(m, math.ceil(round(threshold * m, 9)))
    order = np.lexsort((np.arange(m), -scores))
    return np.sort(order[:count])


def _second_max(latent: np.ndarray) -> np.ndarray:
    n = latent.shape[0]
    if n < 2:
        return latent[0].copy()
    return np.partition(latent, n - 2, axis=0)[n - 2]


def _point_whitebox(trace: ForwardTrace, score: str, head) -> CriticalSet:
    latent = trace.per_point_latent
    pooled = trace.pooled_latent
    n = latent.shape[0]
    at_max = latent == pooled
    unique = at_max & (at_max.sum(axis=0) == 1)
    owned = unique.sum(axis=1)
    members = np.flatnonzero(owned > 0)

    second = _second_max(latent)
    if score == "count":
        margin = (pooled.astype(np.float64) - second.astype(np.float64)) if n > 1 else np.zeros(len(pooled))
        summed = (unique * margin).sum(axis=1)
        scores = owned + summed / (1.0 + summed)
        return CriticalSet(members, scores.astype(np.float64))

    if head is None:
        raise ValueError("logit scores need the model's head")
    scores = np.zeros(n, dtype=np.float64)
    if n > 1:
        for i in members:
            removed = np.where(unique[i], second, pooled)
            scores[i] = np.max(np.abs(head(removed) - trace.logits))
    return CriticalSet(members, scores)


def voxel_saliency(trace: ForwardTrace, cells: np.ndarray) -> np.ndarray:
    """
    Final-stage activation reaching the pooled latent through each cell.

    Each occupied voxel maps to the activation cell min(v // downsample, s - 1);
    it scores the channel sum of that cell's activation over the channels in
    which the cell holds its pooling window's maximum.
    """
    activation = trace.conv_activation
    window = trace.pool_window
    s = activation.shape[1]
    blocks = s // window
    if len(cells) == 0:
        return np.zeros(0, dtype=np.float64)

    mapped = np.minimum(np.asarray(cells) // trace.downsample, s - 1)
    values = activation[:, mapped[:, 0], mapped[:, 1], mapped[:, 2]].astype(np.float64)
    block = mapped // window
    inside = np.all(block < blocks, axis=1)

    scores = np.zeros(len(cells), dtype=np.float64)
    if blocks == 0 or not inside.any():
        return scores
    cropped = activation[:, :blocks * window, :blocks * window, :blocks * window]
    pooled = cropped.reshape(
        activation.shape[0], blocks, window, blocks, window, blocks, window
    ).max(axis=(2, 4, 6))
    b = block[inside]
    window_max = pooled[:, b[:, 0], b[:, 1], b[:, 2]].astype(np.float64)
    held = values[:, inside] == window_max
    scores[inside] = np.where(held, values[:, inside], 0.0).sum(axis=0)
    return scores


def critical_set_whitebox(
    trace: ForwardTrace,
    x: ShapeInput,
    threshold: float = DEFAULT_VOXEL_THRESHOLD,
    score: str = "count",
    head=None,
) -> CriticalSet:
    """
    Critical set from a forward trace.

    Point-set: a point is a member iff it is the unique achiever of the pooled
    max in at least one latent dimension. With score="count" it scores the
    number of such dimensions plus m / (1 + m) for the summed margin m over
    the runner-up; score="logit" scores the L-infinity logit change its
    removal causes (needs head).

    Volumetric: saliency per occupied voxel from the final-stage activation
    (see voxel_saliency); members are the top ``threshold`` fraction.

    Args:
        trace: Forward trace of x
        x: The input the trace came from
        threshold: Member fraction for volumetric inputs
        score: "count" or "logit"
        head: Callable mapping a pooled latent to logits, for score="logit"
    """
    if score not in SCORES:
        raise ValueError(f"unknown saliency score {score!r}")
    subject = OcclusionSubject(x)
    if trace.per_point_latent is not None:
        if subject.cells is not None:
            raise ValueError("point-set trace given a voxel grid")
        if trace.per_point_latent.shape[0] != len(subject):
            raise ValueError("trace and input disagree on the number of points")
        return _point_whitebox(trace, score, head)

    if trace.conv_activation is None or subject.cells is None:
        raise ValueError("volumetric critical sets need a volumetric trace and a voxel grid")
    scores = voxel_saliency(trace, subject.cells)
    return CriticalSet(top_fraction(scores, threshold), scores, threshold)


def critical_set_blackbox(
    model: QueryCounter,
    x: ShapeInput,
    reference: Optional[ForwardTrace] = None,
    tolerance: float = 1e-6,
    threshold: float = DEFAULT_VOXEL_THRESHOLD,
) -> CriticalSet:
    """
    Critical set from output queries only.

    Every element is removed once; its saliency is the L-infinity change of
    the logits. Point-set members are the elements whose change exceeds
    tolerance; volumetric members are the top ``threshold`` fraction. Costs
    one query per element, plus one when no reference trace is supplied. A
    single-element input is critical by definition and costs nothing more.
    """
    subject = OcclusionSubject(x)
    n = len(subject)
    if reference is None:
        reference = model.forward(x)
    if n == 1:
        return CriticalSet(np.array([0]), np.zeros(1), threshold if subject.cells is not None else None)

    full = subject.full_mask()
    scores = np.zeros(n, dtype=np.float64)
    for i in range(n):
        trace = model.forward(subject.build(subject.without(full, i)))
        scores[i] = np.max(np.abs(trace.logits - reference.logits))

    if model.family is Family.VOLUMETRIC:
        return CriticalSet(top_fraction(scores, threshold), scores, threshold)
    return CriticalSet(np.flatnonzero(scores > tolerance), scores)


def salience_distribution(cs: CriticalSet) -> dict:
    """Normalized saliency and quartiles of the scores"""
    scores = cs.scores
    peak = float(scores.max()) if len(scores) else 0.0
    q1, q2, q3 = (np.quantile(scores, [0.25, 0.5, 0.75]) if len(scores) else (0.0, 0.0, 0.0))
    return {
        "elements": int(len(scores)),
        "members": int(len(cs)),
        "max": peak,
        "q1": float(q1),
        "median": float(q2),
        "q3": float(q3),
        "threshold": cs.threshold,
        "normalized": scores / peak if peak > 0 else np.zeros_like(scores),
    }


def salience_frame(cs: CriticalSet, x: ShapeInput) -> pd.DataFrame:
    """One record per element: index, position, saliency, membership"""
    coordinates = OcclusionSubject(x).coordinates()
    return pd.DataFrame(
        {
            "index": np.arange(len(cs.scores)),
            "x": coordinates[:, 0],
            "y": coordinates[:, 1],
            "z": coordinates[:, 2],
            "saliency": cs.scores,
            "is_member": cs.is_member(),
        },
        columns=SALIENCE_COLUMNS,
    )


@dataclass(frozen=True)
class RankState:
    """Position in the ordering sequence of one critical set"""

    permutation_index: int = 0
    seed: int = 0
    ordering: Tuple[int, ...] = ()
    seen: FrozenSet[Tuple[int, ...]] = field(default_factory=frozenset)


def salience_order(cs: CriticalSet, elements: Optional[np.ndarray] = None) -> Tuple[int, ...]:
    """Members by descending saliency, ties by ascending index"""
    members = cs.members
    order = np.lexsort((members, -cs.saliency))
    ids = members[order] if elements is None else np.asarray(elements)[members[order]]
    return tuple(int(i) for i in ids)


def nth_permutation(items: Tuple[int, ...], index: int) -> Tuple[int, ...]:
    """index-th permutation of items in lexicographic order of positions"""
    pool = list(items)
    result = []
    for position in range(len(pool), 0, -1):
        block = math.factorial(position - 1)
        chosen, index = divmod(index, block)
        result.append(pool.pop(chosen))
    return tuple(result)


def rank(
    cs: CriticalSet, state: RankState, elements: Optional[np.ndarray] = None
) -> Tuple[Tuple[int, ...], RankState]:
    """
    Next removal ordering of a critical set.

    Index 0 is the saliency-descending order. Up to ENUMERATION_LIMIT members,
    later indices walk every permutation in lexicographic order; larger sets
    draw seeded shuffles, skipping any ordering already emitted.

    Args:
        cs: Non-empty critical set
        state: Current state (RankState() for a fresh set)
        elements: Maps member indices to the ids placed in the ordering

    Raises:
        RankExhausted: all orderings have been emitted
    """
    if len(cs) == 0:
        raise ValueError("cannot rank an empty critical set")
    base = salience_order(cs, elements)
    index = state.permutation_index
    size = len(base)

    if size <= ENUMERATION_LIMIT:
        if index >= math.factorial(size):
            raise RankExhausted(f"all {math.factorial(size)} orderings of {size} members emitted")
        ordering = nth_permutation(base, index)
        return ordering, RankState(index + 1, state.seed, ordering, state.seen)

    if index == 0:
        ordering = base
    else:
        for attempt in range(MAX_SHUFFLE_RETRIES):
            rng = np.random.default_rng([state.seed, index, attempt])
            ordering = tuple(base[i] for i in rng.permutation(size))
            if ordering not in state.seen:
                break
        else:
            raise RankExhausted(f"no unseen ordering after {MAX_SHUFFLE_RETRIES} shuffles")
    return ordering, RankState(index + 1, state.seed, ordering, state.seen | {ordering})
