"""
Evaluation harness

Batch robustness evaluation: run configuration, accuracy-vs-occlusion
curves, paired comparisons, critical-set surveys, parity checks and report
emission.
"""

from .run_config import ATTACK_KINDS, RunConfig, RunConfigError
from .evaluation import (
    CardinalitySurvey,
    ComparisonReport,
    ParityReport,
    RobustnessCurve,
    compare,
    compare_curves,
    critical_cardinality_survey,
    evaluate,
    parity_check,
)
from .reporting import CURVE_COLUMNS, curve_frame, curve_table, emit, emit_survey, save_records, write_manifest

__all__ = [
    "ATTACK_KINDS",
    "RunConfig",
    "RunConfigError",
    "CardinalitySurvey",
    "ComparisonReport",
    "ParityReport",
    "RobustnessCurve",
    "compare",
    "compare_curves",
    "critical_cardinality_survey",
    "evaluate",
    "parity_check",
    "CURVE_COLUMNS",
    "curve_frame",
    "curve_table",
    "emit",
    "emit_survey",
    "save_records",
    "write_manifest",
]
