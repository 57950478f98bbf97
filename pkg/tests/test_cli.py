"""Command-line pipelines, exit codes, artifacts, and determinism."""

from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from cesarolab import build_block_mesh, build_harmonic_mesh, build_orbit, cesaro_norms
from cesarolab.cli import RunConfig, export_plot_data, main, parse_args, run


def test_usage_errors_exit_1(capsys):
    assert main([]) == 1
    assert main(["unknown-command"]) == 1
    assert main(["verify"]) == 1
    assert main(["verify", "--suite", "nope"]) == 1
    assert main(["mesh", "--kind", "harmonic", "--delta", "0.2"]) == 1
    err = capsys.readouterr().err
    assert "delta" in err


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    assert main(["verify", "--help"]) == 0
    out = capsys.readouterr().out
    assert "--suite" in out


def test_parse_args_defaults_and_verify_overrides():
    cfg = parse_args(["mesh", "--kind", "block"])
    assert cfg.command == "mesh" and cfg.kind == "block"
    assert cfg.n == 1000 and cfg.format == "csv" and cfg.seed == 0
    vcfg = parse_args(["verify", "--suite", "harmonic"])
    assert vcfg.format == "json" and vcfg.n == 10000 and vcfg.blocks == 4


def test_mesh_command_artifacts(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code = main(["mesh", "--kind", "block", "--q1", "8", "--blocks", "2",
                 "--out", str(out), "--no-plot"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,d,t,block"
    sibling = tmp_path / "m_blocks.csv"
    assert sibling.read_text().splitlines()[0] == "k,w,i,Q,block_end,j_unit"
    assert "SUITE mesh-block:" in capsys.readouterr().out
    assert not list(tmp_path.glob("*.png"))


def test_orbit_command_json(tmp_path):
    out = tmp_path / "o.json"
    code = main(["orbit", "--kind", "harmonic", "--n", "64", "--format",
                 "json", "--out", str(out), "--no-plot"])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["n"] == 64
    assert payload["rho"][0] == 1.0
    assert payload["rho_inf_lo"] <= payload["rho"][-1] == payload["rho_inf_hi"]


def test_cesaro_trace_round_trip(tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["cesaro", "--kind", "harmonic", "--n", "120", "--out",
                 str(out), "--no-plot"]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["n", "t", "rho", "y_norm"]
    assert len(rows) == 121
    orbit = build_orbit(build_harmonic_mesh(0.125, 120), validate=False)
    trace = cesaro_norms(orbit, 120)
    parsed = np.array([[float(v) for v in row] for row in rows[1:]])
    assert np.array_equal(parsed[:, 1], orbit.mesh.t)
    assert np.array_equal(parsed[:, 2], orbit.rho)
    assert np.array_equal(parsed[:, 3], trace.y_norm)


def test_cesaro_block_writes_summary_sibling(tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["cesaro", "--kind", "block", "--q1", "8", "--blocks", "2",
                 "--out", str(out), "--no-plot"]) == 0
    rows = list(csv.reader((tmp_path / "trace_blocks.csv").open()))
    assert rows[0] == ["k", "i", "j_unit", "j_end", "Q", "w", "z_norm",
                       "y_at_j_unit", "y_at_j_end"]
    assert len(rows) == 3
    assert rows[1][0] == "1" and rows[2][0] == "2"


def test_export_plot_data_tags(tmp_path):
    out = tmp_path / "plot.csv"
    assert main(["export", "--kind", "block", "--q1", "8", "--blocks", "2",
                 "--out", str(out), "--no-plot"]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["n", "y_norm", "tag"]
    tags = {row[0]: row[2] for row in rows[1:] if row[2]}
    mesh, meta = build_block_mesh(8, 2)
    expected = {}
    for k in range(meta.num_blocks):
        expected[str(int(meta.unit_ends[k]))] = "unit"
        expected[str(int(meta.block_ends[k]))] = "end"
    assert tags == expected

    hout = tmp_path / "plot_h.csv"
    assert main(["export", "--kind", "harmonic", "--n", "30", "--out",
                 str(hout), "--no-plot"]) == 0
    hrows = list(csv.reader(hout.open()))
    assert hrows[0] == ["n", "y_norm"] and len(hrows) == 31


def test_export_plot_data_rejects_empty_trace(tmp_path):
    from cesarolab.orbit import CesaroTrace
    empty = CesaroTrace(y_norm=np.zeros(0), probes={})
    with pytest.raises(ValueError):
        export_plot_data(empty, str(tmp_path / "x.csv"))


def test_verify_command_pass_and_report(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code = main(["verify", "--suite", "harmonic", "--delta", "0.125", "--n",
                 "500", "--out", str(out), "--no-plot"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "SUITE harmonic:" in stdout
    payload = json.loads(out.read_text())
    assert all(rec["pass"] for rec in payload)
    ids = [rec["check_id"] for rec in payload]
    assert "cesaro.lower_bound" in ids


def test_verify_block_requires_two_blocks(tmp_path):
    assert main(["verify", "--suite", "block", "--blocks", "1", "--out",
                 str(tmp_path / "r.json"), "--no-plot"]) == 1


def test_verify_reports_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "--suite", "harmonic", "--delta", "0.125", "--n", "400",
            "--seed", "7", "--threads", "2", "--no-plot"]
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_defaults_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 32, "delta": 0.1, "no_plot": True}))
    out1 = tmp_path / "a.csv"
    assert main(["mesh", "--kind", "harmonic", "--config", str(cfg),
                 "--out", str(out1)]) == 0
    assert len(out1.read_text().splitlines()) == 33
    assert float(out1.read_text().splitlines()[1].split(",")[1]) == 0.1
    out2 = tmp_path / "b.csv"
    assert main(["mesh", "--kind", "harmonic", "--config", str(cfg),
                 "--n", "10", "--out", str(out2)]) == 0
    assert len(out2.read_text().splitlines()) == 11
    assert main(["mesh", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"unknown_key": 1}))
    assert main(["mesh", "--config", str(bad)]) == 1


def test_figures_rendered_by_default(tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["cesaro", "--kind", "harmonic", "--n", "40", "--out",
                 str(out)]) == 0
    assert (tmp_path / "trace_trace.png").exists()
    out2 = tmp_path / "rep.json"
    assert main(["verify", "--suite", "harmonic", "--n", "50", "--out",
                 str(out2)]) == 0
    assert (tmp_path / "rep_margins.png").exists()


def test_run_config_defaults():
    cfg = RunConfig(command="orbit", kind="block", q1=9, blocks=2, seed=4)
    assert cfg.format == "csv" and cfg.threads == 1 and not cfg.no_plot


def test_unknown_run_command_raises():
    with pytest.raises(ValueError):
        run(RunConfig(command="bogus"))
