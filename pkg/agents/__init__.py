"""
Agents package for the occlusion robustness toolkit

Contains the attack agents: critical-set salience and Rank, the ISO attack
in white-box and black-box modes, the random occlusion baseline and the
verification oracles.
"""

from .goals import Goal, GoalKind
from .query_model import OcclusionSubject, QueryCounter
from .salience import (
    CriticalSet,
    RankExhausted,
    RankState,
    critical_set_blackbox,
    critical_set_whitebox,
    latent_equal,
    rank,
    salience_distribution,
    salience_frame,
)
from .attack_log import AttackResult, LogEvent, load_log
from .iso_attacker import EnumerationStats, IsoAttacker, ReplayReport, iso, replay_log
from .baselines import random_occlusion
from .verifier import (
    BruteForceResult,
    Certificate,
    InstanceTooLarge,
    VerificationRefused,
    brute_force_min_occlusion,
    exhaustive_verify,
)

__all__ = [
    "Goal",
    "GoalKind",
    "OcclusionSubject",
    "QueryCounter",
    "CriticalSet",
    "RankExhausted",
    "RankState",
    "critical_set_blackbox",
    "critical_set_whitebox",
    "latent_equal",
    "rank",
    "salience_distribution",
    "salience_frame",
    "AttackResult",
    "LogEvent",
    "load_log",
    "EnumerationStats",
    "IsoAttacker",
    "ReplayReport",
    "iso",
    "replay_log",
    "random_occlusion",
    "BruteForceResult",
    "Certificate",
    "InstanceTooLarge",
    "VerificationRefused",
    "brute_force_min_occlusion",
    "exhaustive_verify",
]
