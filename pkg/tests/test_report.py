"""Check records, pass rule, and canonical serialization."""

from __future__ import annotations

import json
import math

import pytest

from cesarolab import VerificationReport, make_record


def test_pass_rule_margin_at_least_minus_tol():
    assert make_record("x", 0.5, 0.0).passed
    assert make_record("x", 0.0, 0.0).passed
    assert make_record("x", -1e-14, 1e-13).passed
    assert not make_record("x", -2e-13, 1e-13).passed
    assert not make_record("x", -1e-9, 0.0).passed


def test_make_record_rejects_non_finite():
    with pytest.raises(ValueError):
        make_record("x", math.nan, 0.0)
    with pytest.raises(ValueError):
        make_record("x", math.inf, 0.0)


def test_report_aggregates():
    rep = VerificationReport(seed=5)
    rep.add(make_record("a", 1.0, 0.0))
    rep.add(make_record("b", -1.0, 0.0, where=3))
    assert rep.total == 2 and rep.passed_count == 1
    assert not rep.all_passed
    assert rep.worst_margin == -1.0
    assert [r.check_id for r in rep.failures] == ["b"]
    line = rep.summary_line("demo")
    assert line.startswith("SUITE demo: 1/2 worst_margin=")


def test_json_bytes_shape_and_stability():
    rep = VerificationReport(seed=0)
    rep.add(make_record("beta", 0.25, 1e-13, n=2))
    rep.add(make_record("alpha", -0.5, 0.0))
    payload = json.loads(rep.to_json_bytes())
    assert [rec["check_id"] for rec in payload] == ["beta", "alpha"]
    assert set(payload[0]) == {"check_id", "params", "margin", "pass", "tol"}
    assert payload[0]["pass"] is True and payload[1]["pass"] is False
    assert payload[0]["margin"] == 0.25
    assert rep.to_json_bytes() == rep.to_json_bytes()


def test_report_file_writers_round_trip(tmp_path):
    rep = VerificationReport(seed=1)
    rep.add(make_record("gamma", 1.0 / 3.0, 1e-13, k=7))
    jpath = tmp_path / "r.json"
    cpath = tmp_path / "r.csv"
    rep.write_json(jpath)
    rep.write_csv(cpath)
    loaded = json.loads(jpath.read_bytes())
    assert loaded[0]["margin"] == 1.0 / 3.0
    lines = cpath.read_text().splitlines()
    assert lines[0].startswith("check_id")
    assert repr(1.0 / 3.0) in lines[1]
