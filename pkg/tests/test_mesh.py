"""Mesh builders, admissibility validation, and exact-rational twins."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cesarolab import (Mesh, MeshInvalidError, block_level_deviation,
                       block_mesh_fractions, build_block_mesh,
                       build_harmonic_mesh, ensure_valid,
                       harmonic_mesh_fractions, mesh_level,
                       step_condition_forms, validate_mesh)
from cesarolab.mesh import write_blockmeta_csv, write_mesh_csv, write_mesh_json


# ---------------------------------------------------------------------------
# harmonic family

def test_harmonic_steps_and_knots_match_rational_twin():
    mesh = build_harmonic_mesh(0.125, 300)
    d_frac, t_frac = harmonic_mesh_fractions(0.125, 300)
    assert np.allclose(mesh.d, [float(f) for f in d_frac], rtol=1e-15, atol=0)
    assert np.allclose(mesh.t, [float(f) for f in t_frac], rtol=1e-14,
                       atol=1e-18)
    assert mesh.d[0] == 0.125 and mesh.t[0] == 0.0


def test_harmonic_rejects_bad_delta():
    for delta in (0.0, -0.1, 0.1251, 1.0):
        with pytest.raises(ValueError):
            build_harmonic_mesh(delta, 10)
    with pytest.raises(ValueError):
        build_harmonic_mesh(0.125, 0)


def test_harmonic_validation_green():
    mesh = build_harmonic_mesh(0.125, 2000)
    report = validate_mesh(mesh, pair_budget=100000)
    assert report.all_passed
    ids = {r.check_id for r in report.records}
    assert ids == {"mesh.first_step", "mesh.knot_telescoping",
                   "mesh.steps_decreasing", "mesh.step_ratio",
                   "mesh.steps_positive", "mesh.knot_product",
                   "mesh.pair_gap", "mesh.two_sided_exp"}


@given(st.floats(0.005, 0.125), st.integers(1, 300))
@settings(max_examples=40, deadline=None)
def test_harmonic_validation_green_property(delta, n):
    mesh = build_harmonic_mesh(delta, n)
    assert validate_mesh(mesh, pair_budget=50000).all_passed


def test_harmonic_level_monotone():
    # at delta = 1/8 the first step meets the decay condition with equality
    # (1/delta - 64 delta = 0); every later increment is strictly positive
    level = mesh_level(build_harmonic_mesh(0.125, 500))
    diffs = np.diff(level)
    assert diffs[0] == 0.0
    assert np.all(diffs[1:] > 0)
    strict = np.diff(mesh_level(build_harmonic_mesh(0.1, 500)))
    assert np.all(strict > 0)


# ---------------------------------------------------------------------------
# block family

def test_block_mesh_structure_q1_8():
    mesh, meta = build_block_mesh(8, 4)
    assert meta.num_blocks == 4
    assert meta.widths.tolist() == [2, 3, 4, 5]
    assert meta.q[0] == 8
    assert meta.starts[0] == 1
    for k in range(4):
        assert meta.block_ends[k] - meta.starts[k] + 1 == meta.sizes[k]
        assert meta.starts[k] <= meta.unit_ends[k] <= meta.block_ends[k]
    assert np.all(meta.starts[1:] == meta.block_ends[:-1] + 1)
    assert meta.block_ends[-1] == len(mesh)
    assert mesh.d[0] == 1.0 / 8.0


def test_block_q_choice_is_minimal_admissible():
    mesh, meta = build_block_mesh(8, 3)
    for k in range(1, meta.num_blocks):
        q_next = int(meta.q[k])
        w_next = int(meta.widths[k])
        i_next = int(meta.starts[k])
        d_prev = float(mesh.d[meta.block_ends[k - 1] - 1])
        floor3 = (1.0 + 64.0 * d_prev * d_prev) / d_prev
        assert q_next >= i_next
        assert q_next >= 2 ** (k + 2) * w_next
        assert q_next >= floor3
        assert q_next - 1 < max(i_next, 2 ** (k + 2) * w_next, floor3)


def test_block_q_override_accepts_larger_rejects_smaller():
    mesh, meta = build_block_mesh(8, 2, q_overrides={2: 1000})
    assert meta.q[1] == 1000
    with pytest.raises(ValueError):
        build_block_mesh(8, 2, q_overrides={2: 10})


def test_block_rejects_bad_q1():
    for bad in (7, 0, -3):
        with pytest.raises(ValueError):
            build_block_mesh(bad, 2)
    with pytest.raises(TypeError):
        build_block_mesh(8.0, 2)


def test_block_first_steps_match_rational_twin():
    mesh, _ = build_block_mesh(8, 1)
    d_frac, t_frac, qs = block_mesh_fractions(8, 18)
    assert qs == [8]
    assert np.allclose(mesh.d[:18], [float(f) for f in d_frac], rtol=1e-13,
                       atol=0)
    assert np.allclose(mesh.t[:18], [float(f) for f in t_frac], rtol=1e-13,
                       atol=1e-18)


def test_block_rational_twin_rejects_large_depth():
    with pytest.raises(ValueError):
        block_mesh_fractions(8, 23)


def test_block_validation_green():
    mesh, _ = build_block_mesh(8, 2)
    assert validate_mesh(mesh, pair_budget=100000).all_passed


@given(st.integers(8, 64), st.integers(1, 2))
@settings(max_examples=15, deadline=None)
def test_block_validation_green_property(q1, blocks):
    mesh, _ = build_block_mesh(q1, blocks)
    assert validate_mesh(mesh, pair_budget=30000).all_passed


def test_block_level_constant_within_blocks_jumps_between():
    mesh, meta = build_block_mesh(8, 3)
    deviations = block_level_deviation(mesh, meta)
    assert np.all(deviations <= 1e-10)
    level = mesh_level(mesh)
    for i_next in meta.starts[1:]:
        assert level[i_next - 1] > level[i_next - 2] + 1.0


# ---------------------------------------------------------------------------
# validation and the three step-condition forms

def test_tampered_mesh_fails_validation_and_ensure_valid_raises():
    mesh = build_harmonic_mesh(0.125, 50)
    d = mesh.d.copy()
    d[10] = d[9] * 1.5
    t = np.concatenate([[0.0], np.cumsum(d[:-1])])
    bad = Mesh(d=d, t=t, kind="harmonic", param=0.125)
    report = validate_mesh(bad, pair_budget=10000)
    assert not report.all_passed
    failed = {r.check_id for r in report.failures}
    assert "mesh.steps_decreasing" in failed or "mesh.step_ratio" in failed
    with pytest.raises(MeshInvalidError):
        ensure_valid(bad, pair_budget=10000)


def test_step_condition_forms_agree_on_valid_meshes():
    for mesh in (build_harmonic_mesh(0.125, 800), build_block_mesh(8, 2)[0]):
        forms = step_condition_forms(mesh)
        ratio, inverse, level = (forms["ratio_form"], forms["inverse_form"],
                                 forms["level_form"])
        assert ratio.shape == inverse.shape == level.shape
        assert np.array_equal(ratio, inverse)
        assert np.array_equal(ratio, level)
        assert np.all(ratio)


def test_step_condition_forms_agree_on_a_violating_mesh():
    mesh = build_harmonic_mesh(0.125, 60)
    d = mesh.d.copy()
    d[20] = d[19]  # no decrease at index 20 -> all three forms must flag it
    t = np.concatenate([[0.0], np.cumsum(d[:-1])])
    bad = Mesh(d=d, t=t, kind="harmonic", param=0.125)
    forms = step_condition_forms(bad)
    assert np.array_equal(forms["ratio_form"], forms["inverse_form"])
    assert np.array_equal(forms["ratio_form"], forms["level_form"])
    assert not forms["ratio_form"][19]


# ---------------------------------------------------------------------------
# exports

def test_mesh_csv_and_json_exports(tmp_path):
    mesh, meta = build_block_mesh(8, 2)
    cpath = tmp_path / "mesh.csv"
    write_mesh_csv(mesh, cpath, meta)
    lines = cpath.read_text().splitlines()
    assert lines[0] == "n,d,t,block"
    assert len(lines) == len(mesh) + 1
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[1]) == mesh.d[0]
    assert first[3] == "1"

    hpath = tmp_path / "harm.csv"
    write_mesh_csv(build_harmonic_mesh(0.125, 5), hpath)
    row = hpath.read_text().splitlines()[1].split(",")
    assert row[3] == ""

    bpath = tmp_path / "blocks.csv"
    write_blockmeta_csv(meta, bpath)
    blines = bpath.read_text().splitlines()
    assert blines[0] == "k,w,i,Q,block_end,j_unit"
    assert len(blines) == meta.num_blocks + 1

    jpath = tmp_path / "mesh.json"
    write_mesh_json(mesh, jpath, meta)
    import json
    payload = json.loads(jpath.read_text())
    assert payload[0] == {"n": 1, "d": mesh.d[0], "t": 0.0, "block": 1}
    assert payload[-1]["block"] == 2


def test_mesh_csv_round_trip_exact(tmp_path):
    mesh = build_harmonic_mesh(0.109375, 64)
    path = tmp_path / "m.csv"
    write_mesh_csv(mesh, path)
    rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
    back_d = np.array([float(r[1]) for r in rows])
    back_t = np.array([float(r[2]) for r in rows])
    assert np.array_equal(back_d, mesh.d)
    assert np.array_equal(back_t, mesh.t)
