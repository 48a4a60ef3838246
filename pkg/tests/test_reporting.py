"""Tests for curve reports, survey files and the run manifest."""

import json

import pandas as pd
import pytest

from harness import CURVE_COLUMNS, RobustnessCurve, curve_frame, curve_table, emit, emit_survey, write_manifest
from harness.evaluation import RECORD_COLUMNS, CardinalitySurvey
from harness.reporting import read_curve_csv


def make_curve(method: str, rows) -> RobustnessCurve:
    records = pd.DataFrame(
        [
            {
                "index": i, "label": 0, "clean_prediction": 0, "clean_correct": correct,
                "n_elements": 100, "goal_met": size >= 0, "broken": size >= 0,
                "final_prediction": 1 if size >= 0 else 0, "occlusion_size": size,
                "occlusion_fraction": size / 100 if size >= 0 else float("nan"),
                "queries": 10, "seconds": 0.5, "error": "",
            }
            for i, (correct, size) in enumerate(rows)
        ],
        columns=RECORD_COLUMNS,
    )
    return RobustnessCurve("m.w3dr", "synthetic", method, (0.0, 25.0, 50.0), records)


def test_step_curve_accuracies():
    # Two inputs break at 10% and 60% occlusion, one never breaks, one starts wrong
    curve = make_curve("iso", [(True, 10), (True, 60), (True, -1), (False, -1)])
    assert curve.accuracy_at(0.0) == pytest.approx(0.75)
    assert curve.accuracy_at(25.0) == pytest.approx(0.5)
    assert curve.accuracy_at(50.0) == pytest.approx(0.5)
    assert curve.accuracy_at(60.0) == pytest.approx(0.25)
    assert curve.mean_over_correct("queries") == 10


def test_errors_leave_the_denominator():
    curve = make_curve("iso", [(True, 10), (True, -1)])
    curve.records.loc[1, "error"] = "ValueError: bad"
    assert curve.n_evaluated == 1 and curve.n_errors == 1
    assert curve.accuracy_at(0.0) == 1.0
    assert curve.accuracy_at(25.0) == 0.0


def test_csv_round_trip(tmp_path):
    curves = [make_curve("iso", [(True, 10), (True, 60)]), make_curve("random", [(True, 80), (True, 90)])]
    path = emit(curves, str(tmp_path / "curves.csv"))
    frame = read_curve_csv(path)
    assert list(frame.columns) == CURVE_COLUMNS
    assert len(frame) == 6
    pd.testing.assert_frame_equal(frame, curve_frame(curves), check_dtype=False)


def test_empty_report_is_header_only(tmp_path):
    path = emit([], str(tmp_path / "empty.csv"))
    assert open(path).read().strip() == ",".join(CURVE_COLUMNS)


def test_markdown_table_layout(tmp_path):
    curves = [make_curve("iso", [(True, 10), (True, 60)]), make_curve("random", [(True, 80), (True, 90)])]
    text = curve_table(curve_frame(curves))
    lines = text.splitlines()
    assert lines[0] == "| Model | Dataset | Method | 0% | 25% | 50% |"
    assert lines[1] == "|---|---|---|---|---|---|"
    assert lines[2] == "| m.w3dr | synthetic | iso | 100.0 | 50.0 | 50.0 |"
    assert lines[3] == "| m.w3dr | synthetic | random | 100.0 | 100.0 | 100.0 |"
    path = emit(curves, str(tmp_path / "curves.md"), "table-text")
    assert open(path).read() == text


def test_unknown_format():
    with pytest.raises(ValueError):
        emit([], "x.txt", "xlsx")


def test_survey_files(tmp_path):
    survey = CardinalitySurvey(
        pd.DataFrame({"index": [0, 1], "n_elements": [10, 10], "cardinality": [3, 3], "fraction": [0.3, 0.3]}),
        pd.DataFrame({"bin": [3], "count": [2]}),
        {"mean": 3.0},
    )
    paths = emit_survey(survey, str(tmp_path))
    assert pd.read_csv(paths["histogram"])["count"].tolist() == [2]
    assert json.load(open(paths["summary"])) == {"mean": 3.0}


def test_manifest(tmp_path):
    path = write_manifest(str(tmp_path), "eval", {"sample_size": 5}, {"seed": 1}, ["curve.csv"])
    manifest = json.load(open(path))
    assert manifest["command"] == "eval"
    assert manifest["seeds"] == {"seed": 1}
    assert manifest["outputs"] == ["curve.csv"]
    assert {"python", "numpy", "pandas"} <= set(manifest["versions"])
