"""
Iterative Salience Occlusion

Repeatedly recompute the critical set of the current occluded input, remove
its members in Rank order while the original class's confidence does not
rise, put back removals the goal does not need, and restart from the full
input with the next ordering when a pass stalls.

With an exhaustive goal the restarts walk every ordering of every critical
set the descent can reach, depth first, and keep the smallest occlusion.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np

from engine.network import ForwardTrace, Network, Prediction, ShapeInput
from .attack_log import AttackResult, EventLog, LogEvent, survivor_mask
from .goals import Budget, Goal
from .query_model import OcclusionSubject, QueryCounter, as_counter
from .salience import (
    DEFAULT_VOXEL_THRESHOLD,
    ENUMERATION_LIMIT,
    CriticalSet,
    RankExhausted,
    RankState,
    VerificationRefused,
    critical_set_blackbox,
    critical_set_whitebox,
    rank,
)

logger = logging.getLogger(__name__)

MODES = ("whitebox", "blackbox")


@dataclass
class EnumerationStats:
    """What an exhaustive run covered"""

    nodes_expanded: int = 0
    orderings_covered: int = 0
    max_cardinality: int = 0
    depth: int = 0
    complete: bool = True


@dataclass
class _Run:
    """Fixed context of one attack: the input, its reference trace and the goal"""

    subject: OcclusionSubject
    reference: ForwardTrace
    original: Prediction
    goal: Goal
    budget: Budget

    @property
    def y(self) -> int:
        return self.original.label

    def met(self, trace: ForwardTrace) -> bool:
        return self.goal.is_met(self.original, self.reference, trace)


class IsoAttacker:
    """
    ISO attack against one model.

    Args:
        model: Network or QueryCounter to attack
        mode: "whitebox" reads traces, "blackbox" queries removals
        score: White-box point saliency, "count" or "logit"
        tolerance: Black-box logit tolerance
        threshold: Volumetric member fraction
        seed: Seed for Rank shuffles of large critical sets
    """

    def __init__(
        self,
        model: Union[Network, QueryCounter],
        mode: str = "whitebox",
        score: str = "count",
        tolerance: float = 1e-6,
        threshold: float = DEFAULT_VOXEL_THRESHOLD,
        seed: int = 0,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown attack mode {mode!r}")
        self.counter = as_counter(model)
        self.mode = mode
        self.score = score
        self.tolerance = tolerance
        self.threshold = threshold
        self.seed = seed

    @property
    def method(self) -> str:
        return "iso" if self.mode == "whitebox" else "iso-blackbox"

    def critical_set(self, x: ShapeInput, trace: ForwardTrace) -> CriticalSet:
        if self.mode == "whitebox":
            return critical_set_whitebox(trace, x, self.threshold, self.score, head=self.counter.head)
        return critical_set_blackbox(self.counter, x, trace, self.tolerance, self.threshold)

    def _start(self, x: ShapeInput, goal: Goal) -> _Run:
        self.counter.network.check_input(x)
        budget = Budget(goal, self.counter)
        reference = self.counter.forward(x)
        return _Run(OcclusionSubject(x), reference, reference.prediction(), goal, budget)

    def _finish(self, run: _Run, removed, trace: ForwardTrace, goal_met: bool, restarts: int,
                exhausted: bool, events: List[LogEvent]) -> AttackResult:
        n = len(run.subject)
        return AttackResult(
            survivor=run.subject.build(survivor_mask(n, removed)),
            removed=tuple(removed),
            n_elements=n,
            queries=run.budget.used_queries,
            elapsed=run.budget.elapsed,
            goal_met=goal_met,
            predicted_before=run.original,
            predicted_after=trace.prediction(),
            method=self.method,
            restarts=restarts,
            exhausted=exhausted,
            log=events,
        )

    def _pass(self, run: _Run, ordering, mask: np.ndarray, trace: ForwardTrace, query: Callable,
              record: Callable) -> Tuple[np.ndarray, ForwardTrace, List[int]]:
        """Gated removals along one ordering; stops as soon as the goal holds"""
        y = run.y
        taken: List[int] = []
        for element in ordering:
            if mask.sum() <= 1 or run.budget.exhausted():
                break
            trial = run.subject.without(mask, element)
            candidate = query(trial)
            if candidate.probs[y] <= trace.probs[y]:
                record("remove", element, trace.probs[y], candidate.probs[y], candidate.predicted_class)
                mask, trace = trial, candidate
                taken.append(element)
                if run.met(trace):
                    break
        return mask, trace, taken

    def _restore(self, run: _Run, mask: np.ndarray, trace: ForwardTrace, removed: List[int], query: Callable,
                 log: EventLog) -> Tuple[np.ndarray, ForwardTrace, List[int]]:
        """Put back, in removal order, every removed element the goal does not need"""
        y = run.y
        removed = list(removed)
        for element in list(removed):
            if run.budget.exhausted():
                break
            trial = mask.copy()
            trial[element] = True
            candidate = query(trial)
            if run.met(candidate):
                log.add("restore", element, trace.probs[y], candidate.probs[y], candidate.predicted_class)
                mask, trace = trial, candidate
                removed.remove(element)
        return mask, trace, removed

    def attack(self, x: ShapeInput, goal: Optional[Goal] = None) -> AttackResult:
        """
        Run ISO until the goal holds (or, with goal.minimize, until the
        budget or the ranking space runs out). A removal pass ends when the
        goal holds, which for untargeted goals is the first label change.
        Exhaustive goals are handed to enumerate_orderings.

        Returns:
            AttackResult holding the best occlusion found; goal_met is False
            when no occlusion met the goal before the run stopped
        """
        goal = goal or Goal()
        if goal.exhaustive:
            return self.enumerate_orderings(x, goal)[0]
        counter = self.counter
        run = self._start(x, goal)
        subject, reference, y = run.subject, run.reference, run.y
        log = EventLog()

        def query(mask: np.ndarray) -> ForwardTrace:
            return counter.forward(subject.build(mask))

        if run.met(reference):
            return self._finish(run, (), reference, True, 0, False, log.events)

        states: Dict[FrozenSet[int], RankState] = {}
        best = None
        restarts = 0
        exhausted = False
        mask = subject.full_mask()
        removed: List[int] = []
        trace = reference

        def restart():
            nonlocal mask, removed, trace, restarts
            log.add("restart", -1, trace.probs[y], reference.probs[y], y)
            mask, removed, trace = subject.full_mask(), [], reference
            restarts += 1

        while not run.budget.exhausted():
            limit = goal.restart_limit
            if limit is not None and restarts > limit:
                break

            elements = np.flatnonzero(mask)
            cs = self.critical_set(subject.build(mask), trace)
            at_root = len(removed) == 0
            if len(cs) == 0:
                if at_root:
                    exhausted = True
                    break
                restart()
                continue

            key = frozenset(int(elements[m]) for m in cs.members)
            try:
                ordering, states[key] = rank(cs, states.get(key, RankState(seed=self.seed)), elements)
            except RankExhausted:
                if at_root:
                    exhausted = True
                    break
                restart()
                continue

            mask, trace, taken = self._pass(run, ordering, mask, trace, query, log.add)
            removed.extend(taken)

            if run.met(trace):
                mask, trace, removed = self._restore(run, mask, trace, removed, query, log)
                if best is None or len(removed) < len(best[0]):
                    best = (tuple(removed), trace)
                    logger.debug("ISO found occlusion of %d/%d after %d restarts", len(removed), len(subject), restarts)
                if not goal.minimize:
                    break
                restart()
            elif not taken:
                restart()

        if best is not None:
            return self._finish(run, best[0], best[1], True, restarts, exhausted, log.events)
        return self._finish(run, removed, trace, False, restarts, exhausted, log.events)

    def enumerate_orderings(
        self, x: ShapeInput, goal: Optional[Goal] = None, max_cardinality: int = ENUMERATION_LIMIT
    ) -> Tuple[AttackResult, EnumerationStats]:
        """
        Exhaustive ISO: every Rank ordering of every critical set the descent
        reaches is run once, depth first, and the smallest occlusion is kept.
        An occluded input reached along two paths is expanded once. Forward
        passes and single removal steps are cached per survivor, so queries
        count distinct inputs. The log holds the derivation of the returned
        occlusion.

        Args:
            x: Input to attack
            goal: Goal to reach; exhaustive and minimize are forced on
            max_cardinality: Largest critical set that may be enumerated

        Raises:
            VerificationRefused: a reachable critical set exceeds max_cardinality
        """
        goal = replace(goal or Goal(), exhaustive=True, minimize=True)
        counter = self.counter
        run = self._start(x, goal)
        subject, y = run.subject, run.y

        masks: Dict[bytes, np.ndarray] = {}
        traces: Dict[bytes, ForwardTrace] = {}
        goal_met: Dict[bytes, bool] = {}
        sizes: Dict[bytes, int] = {}
        transitions: Dict[Tuple[bytes, int], Tuple[bytes, bool]] = {}

        def visit(mask: np.ndarray, trace: Optional[ForwardTrace] = None) -> bytes:
            key = mask.tobytes()
            if key not in traces:
                masks[key] = mask
                traces[key] = trace if trace is not None else counter.forward(subject.build(mask))
                goal_met[key] = run.met(traces[key])
                sizes[key] = int(mask.sum())
            return key

        def lookup(mask: np.ndarray) -> ForwardTrace:
            return traces[visit(mask)]

        def step(key: bytes, element: int) -> Tuple[bytes, bool]:
            move = transitions.get((key, element))
            if move is None:
                child = visit(subject.without(masks[key], element))
                move = (child, bool(traces[child].probs[y] <= traces[key].probs[y]))
                transitions[(key, element)] = move
            return move

        def removal_log(elements) -> EventLog:
            log, key = EventLog(), root
            for element in elements:
                child, _ = transitions[(key, element)]
                log.add("remove", element, traces[key].probs[y], traces[child].probs[y], traces[child].predicted_class)
                key = child
            return log

        stats = EnumerationStats()
        root = visit(subject.full_mask(), run.reference)
        if goal_met[root]:
            return self._finish(run, (), run.reference, True, 0, False, []), stats

        best = None
        visited = {root}
        stack: List[Tuple[bytes, Tuple[int, ...], int]] = [(root, (), 0)]
        while stack and stats.complete:
            key, removed, level = stack.pop()
            mask = masks[key]
            cs = self.critical_set(subject.build(mask), traces[key])
            if len(cs) > max_cardinality:
                raise VerificationRefused(len(cs), max_cardinality)
            stats.nodes_expanded += 1
            if len(cs) == 0:
                continue
            stats.max_cardinality = max(stats.max_cardinality, len(cs))
            stats.depth = max(stats.depth, level + 1)

            elements = np.flatnonzero(mask)
            state = RankState(seed=self.seed)
            while True:
                if run.budget.exhausted():
                    stats.complete = False
                    break
                try:
                    ordering, state = rank(cs, state, elements)
                except RankExhausted:
                    break
                stats.orderings_covered += 1

                current, taken = key, []
                for element in ordering:
                    if sizes[current] <= 1:
                        break
                    child, accepted = step(current, element)
                    if accepted:
                        current = child
                        taken.append(element)
                        if goal_met[current]:
                            break

                if goal_met[current]:
                    path = list(removed) + taken
                    log = removal_log(path)
                    _, kept_trace, kept = self._restore(run, masks[current], traces[current], path, lookup, log)
                    if best is None or len(kept) < len(best[0]):
                        best = (tuple(kept), kept_trace, log.events)
                elif taken and current not in visited:
                    visited.add(current)
                    stack.append((current, removed + tuple(taken), level + 1))

        logger.debug(
            "Exhaustive ISO expanded %d inputs and ran %d orderings (complete=%s)",
            stats.nodes_expanded, stats.orderings_covered, stats.complete,
        )
        restarts = max(stats.orderings_covered - 1, 0)
        if best is not None:
            return self._finish(run, best[0], best[1], True, restarts, stats.complete, best[2]), stats
        return self._finish(run, (), run.reference, False, restarts, stats.complete, []), stats


def iso(
    model: Union[Network, QueryCounter],
    x: ShapeInput,
    goal: Optional[Goal] = None,
    mode: str = "whitebox",
    **kwargs,
) -> AttackResult:
    """Run one ISO attack; keyword arguments go to IsoAttacker"""
    return IsoAttacker(model, mode=mode, **kwargs).attack(x, goal)


@dataclass
class ReplayReport:
    ok: bool = True
    checked: int = 0
    violations: List[str] = field(default_factory=list)

    def fail(self, message: str):
        self.ok = False
        self.violations.append(message)


def replay_log(
    model: Union[Network, QueryCounter],
    x: ShapeInput,
    events: List[LogEvent],
    goal: Optional[Goal] = None,
    atol: float = 1e-9,
) -> ReplayReport:
    """
    Re-run an attack log against the model and re-check it.

    Checks that every removal kept the original class's confidence from
    rising, that logged confidences reproduce, that every restoration kept
    the goal, and that every removal left in place after a success broke
    the goal when tested.
    """
    goal = goal or Goal()
    counter = as_counter(model)
    subject = OcclusionSubject(x)
    reference = counter.forward(x)
    original = reference.prediction()
    y = original.label
    report = ReplayReport()

    mask = subject.full_mask()
    removed: List[int] = []
    trace = reference
    position = 0

    while position < len(events):
        event = events[position]
        position += 1
        if event.action == "restart":
            mask, removed, trace = subject.full_mask(), [], reference
            continue
        if event.action != "remove":
            report.fail(f"step {event.step}: {event.action} outside a restoration pass")
            continue

        trial = subject.without(mask, event.element_index)
        candidate = counter.forward(subject.build(trial))
        report.checked += 1
        if abs(candidate.probs[y] - event.confidence_after) > atol or abs(trace.probs[y] - event.confidence_before) > atol:
            report.fail(f"step {event.step}: logged confidences do not reproduce")
        if candidate.probs[y] > trace.probs[y]:
            report.fail(f"step {event.step}: removal of {event.element_index} raised confidence")
        mask, trace = trial, candidate
        removed.append(event.element_index)
        if not goal.is_met(original, reference, trace):
            continue

        for element in list(removed):
            restored = mask.copy()
            restored[element] = True
            candidate = counter.forward(subject.build(restored))
            keeps_goal = goal.is_met(original, reference, candidate)
            report.checked += 1
            logged = (
                position < len(events)
                and events[position].action == "restore"
                and events[position].element_index == element
            )
            if logged:
                position += 1
                if not keeps_goal:
                    report.fail(f"restoring {element} broke the goal")
                mask, trace = restored, candidate
                removed.remove(element)
            elif keeps_goal:
                report.fail(f"element {element} could have been restored")
    return report
