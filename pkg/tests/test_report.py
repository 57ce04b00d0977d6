import json

import numpy as np
import pytest

from treecover.report import ExperimentReport, emit


def _report():
    r = ExperimentReport("demo", {"n": 3}, {"seed": 1})
    r.add_stat("a", [1.0, 2.0, 3.0])
    r.add_stat("b", [np.nan, 1.0, np.inf])
    r.add_test("t1", 0.5, True, p=0.3, threshold=0.01)
    r.add_test("t2", np.nan, False, kind="calibrated", note="calibrated, not paper-derived")
    return r


def test_json_keys_and_values(tmp_path):
    r = _report()
    (path,) = emit(r, tmp_path, "json")
    d = json.loads(path.read_text())
    assert {"schema", "name", "params", "seeds", "stats", "tests", "pass"} <= d.keys()
    assert d["schema"] == 1 and d["pass"] is False
    assert d["tests"][1]["statistic"] == "nan"
    assert d["tests"][0]["pass"] is True
    assert d["stats"][0]["mean"] == 2.0


def test_nonfinite_samples_are_summarised_over_finite_values():
    s = _report().to_dict()["stats"][1]
    assert s["count"] == 3 and s["mean"] == 1.0


def test_csv_rows(tmp_path):
    r = _report()
    (path,) = emit(r, tmp_path, "csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "replica_id,statistic,value"
    assert len(lines) - 1 == 3 * 2
    assert "0,b,nan" in lines


def test_empty_report_is_valid(tmp_path):
    r = ExperimentReport("empty")
    paths = emit(r, tmp_path)
    d = json.loads(paths[0].read_text())
    assert d["stats"] == [] and d["tests"] == [] and d["pass"] is True
    assert paths[1].read_text() == "replica_id,statistic,value\n"


def test_emit_idempotent(tmp_path):
    r = _report()
    first = [p.read_bytes() for p in emit(r, tmp_path)]
    second = [p.read_bytes() for p in emit(r, tmp_path)]
    assert first == second


def test_bad_format_and_lengths(tmp_path):
    with pytest.raises(ValueError):
        emit(_report(), tmp_path, "xml")
    with pytest.raises(ValueError):
        ExperimentReport("x").add_stat("a", [1.0, 2.0], replica_ids=[0])


def test_merge_prefixes():
    a = ExperimentReport("outer")
    b = _report()
    b.notes.append("hello")
    a.merge(b, "part")
    assert a.test("part/t1").passed
    assert [s.name for s in a.stats] == ["part/a", "part/b"]
    assert a.notes == ["part/hello"]
    with pytest.raises(KeyError):
        a.test("t1")
