from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from casorati_submersion import cli
from casorati_submersion import fixtures as fx


def run(*argv):
    buf = io.StringIO()
    code = cli.main(list(argv), out=buf)
    return code, buf.getvalue()


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def _finite(obj):
    if isinstance(obj, dict):
        return all(_finite(v) for v in obj.values())
    if isinstance(obj, list):
        return all(_finite(v) for v in obj)
    if isinstance(obj, float):
        return np.isfinite(obj)
    return True


def test_example2_equality_exit_zero():
    code, text = run("check", "--fixture", "example2", "--theorem", "general")
    assert code == cli.EXIT_OK
    doc = json.loads(text)
    assert doc["schema"] == 1
    assert len(doc["reports"]) == 2
    for r in doc["reports"]:
        e = r["theorems"]["general"]
        assert abs(e["gap_delta"]) < 1e-8 and abs(e["gap_hat"]) < 1e-8


def test_example1_strict_exit_zero():
    """Stated behaviour: strict verdict and exit 0. The pipeline finds the inequality violated."""
    code, text = run("check", "--fixture", "example1", "--point", "0,0,0,0,0,1")
    e = json.loads(text)["reports"][0]["theorems"]["general"]
    assert e["verdict"] == "strict", f"gap_delta {e['gap_delta']!r}"
    assert code == cli.EXIT_OK


def test_example1_violation_exit_code_is_two():
    code, text = run("check", "--fixture", "example1", "--point", "0,0,0,0,0,1")
    e = json.loads(text)["reports"][0]["theorems"]["general"]
    assert e["gap_delta"] == pytest.approx(-5.0 / 9.0)
    assert code == cli.EXIT_VIOLATION


def test_flat_product_all_zero():
    code, text = run("check", "--fixture", "flat_product")
    assert code == cli.EXIT_OK
    r = json.loads(text)["reports"][0]
    assert all(v == 0.0 for v in r["norms"].values())
    for e in r["theorems"].values():
        assert e["lhs"] == 0.0 and e["gap_delta"] == 0.0


def test_report_fields_are_finite_and_complete():
    _, text = run("check", "--fixture", "example4")
    r = json.loads(text)["reports"][0]
    assert _finite(r)
    for key in ("ell", "s", "norms", "delta_N", "mixed_sum", "scalar_curvatures", "casorati", "residuals", "optimizer"):
        assert key in r
    assert set(r["theorems"]) == {"general", "csf"}
    for e in r["theorems"].values():
        for key in ("lhs", "rhs_delta", "rhs_hat", "gap_delta", "gap_hat", "equality_flags"):
            assert key in e


def test_rsf_report_flags_printed_value():
    _, text = run("check", "--fixture", "example3", "--theorem", "rsf")
    e = json.loads(text)["reports"][0]["theorems"]["rsf"]
    detail = e["rhs_detail"]
    assert detail["printed_delta"] != detail["rhs_delta"]
    assert detail["notes"]


@pytest.mark.parametrize("name", ["example1", "example4", "hopf_sphere"])
def test_json_round_trip_is_bit_identical(name):
    _, text = run("check", "--fixture", name)
    doc = json.loads(text)
    again = cli.dumps(doc) + "\n"
    assert again == text
    assert json.loads(again) == doc


def test_deterministic_reports():
    assert run("check", "--fixture", "heisenberg") == run("check", "--fixture", "heisenberg")


def test_csv_check_format():
    code, text = run("check", "--fixture", "example2", "--format", "csv")
    rows = _rows(text)
    assert rows[0] == list(fx.get("example2").spec.coords) + list(cli.SWEEP_COLUMNS)
    assert len(rows) == 3 and code == 0


def test_unknown_fixture_exit_one(capsys):
    code, _ = run("check", "--fixture", "nope")
    assert code == cli.EXIT_ERROR
    assert "error [input]" in capsys.readouterr().err


def test_bad_point_exit_one(capsys):
    code, _ = run("check", "--fixture", "example1", "--point", "1,2")
    assert code == cli.EXIT_ERROR
    code, _ = run("check", "--fixture", "example1", "--point", "0,0,0,0,0,zz")
    assert code == cli.EXIT_ERROR


def test_out_of_domain_point_exit_one(capsys):
    code, _ = run("check", "--fixture", "example1", "--point", "0,0,0,0,0,0")
    assert code == cli.EXIT_ERROR
    assert "error [" in capsys.readouterr().err


def test_small_dimensions_give_notes():
    code, text = run("check", "--fixture", "example2", "--theorem", "general", "--point", "0.1,1,0.2,1,0.3,1")
    assert code == 0
    _, text = run("tensors", "--fixture", "example2")
    assert json.loads(text)["dumps"]


def test_help_lists_every_flag():
    parser = cli.build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    texts = {name: p.format_help() for name, p in sub.choices.items()}
    for flag in ("--fixture", "--spec", "--point", "--points", "--threads"):
        assert all(flag in t for t in texts.values())
    for flag in ("--theorem", "--tol", "--seed", "--format"):
        assert flag in texts["check"] and flag in texts["sweep"]
    assert "--grid" in texts["sweep"]


def test_console_help_runs():
    out = subprocess.run([sys.executable, "-m", "casorati_submersion", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "check" in out.stdout and "sweep" in out.stdout and "tensors" in out.stdout


def test_spec_file_input(tmp_path):
    doc = fx.get("example3").spec.to_dict()
    doc["points"] = [[0.5, -0.25, 1.0, 2.0, 0.0, 0.1]]
    doc["theorem"] = "rsf"
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    code, text = run("check", "--spec", str(path))
    assert code == 0
    r = json.loads(text)["reports"][0]
    assert r["source"]["kind"] == "spec"
    assert set(r["theorems"]) == {"general", "rsf"}


def test_bad_spec_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"coords": ["x"], "base_coords": ["y"], "metric": {"x,x": "1 +"}, "base_metric": {"y,y": "1"}, "map": ["x"]}')
    code, _ = run("check", "--spec", str(path), "--point", "1")
    assert code == cli.EXIT_ERROR
    assert "error [spec]" in capsys.readouterr().err
    path.write_text('{"coords": ["x"], "base_coords": ["y"], "metric": {"x,x": "1 + q"}, "base_metric": {"y,y": "1"}, "map": ["x"]}')
    code, _ = run("check", "--spec", str(path), "--point", "1")
    assert code == cli.EXIT_ERROR
    assert "unknown coordinate" in capsys.readouterr().err


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_points_file(tmp_path, fmt):
    pts = [[0.0, 0.0, 0.0, 0.0, 0.0, x6] for x6 in (0.5, 1.0, 2.0)]
    path = tmp_path / "pts.txt"
    path.write_text(json.dumps(pts) if fmt == "json" else "\n".join(",".join(map(str, p)) for p in pts))
    _, text = run("check", "--fixture", "example1", "--points", str(path))
    assert [r["point"] for r in json.loads(text)["reports"]] == pts


def test_threads_preserve_order(tmp_path):
    pts = [[0.0, 0.0, 0.0, 0.0, 0.0, x6] for x6 in np.linspace(0.5, 2.0, 6)]
    path = tmp_path / "pts.json"
    path.write_text(json.dumps(pts))
    serial = run("check", "--fixture", "example1", "--points", str(path))
    parallel = run("check", "--fixture", "example1", "--points", str(path), "--threads", "4")
    assert serial == parallel


def test_tensors_example1():
    code, text = run("tensors", "--fixture", "example1", "--point", "0,0,0,0,0,1")
    assert code == 0
    d = json.loads(text)["dumps"][0]
    TH = np.array(d["T_H"])
    expect = np.zeros((3, 3, 3))
    for i in range(3):
        expect[i, i, 2] = -1.0
    np.testing.assert_allclose(TH, expect, atol=1e-9)
    assert np.abs(np.array(d["A_V"])).max() < 1e-9


def test_tensors_example4():
    _, text = run("tensors", "--fixture", "example4")
    TH = np.array(json.loads(text)["dumps"][0]["T_H"])
    expect = np.zeros((4, 4, 4))
    for a in range(4):
        expect[a, a, a] = -1.0
    np.testing.assert_allclose(TH, expect, atol=1e-8)


def test_tensors_flat_zero():
    _, text = run("tensors", "--fixture", "flat_product")
    d = json.loads(text)["dumps"][0]
    assert np.abs(np.array(d["T_H"])).max() == 0.0 and np.abs(np.array(d["A_V"])).max() == 0.0


def test_empty_grid_header_only():
    code, text = run("sweep", "--fixture", "example1", "--grid", "x6=0.5:2:0")
    assert code == 0
    assert _rows(text) == [list(fx.get("example1").spec.coords) + list(cli.SWEEP_COLUMNS)]


def test_grid_skips_out_of_domain(capsys):
    code, text = run("sweep", "--fixture", "example2", "--grid", "x2=-1:1:3")
    # the domain requires x2 > 0, so only x2 = 1 survives
    assert len(_rows(text)) == 1 + 1
    assert "skipped 2" in capsys.readouterr().err


def test_grid_is_lexicographic():
    _, text = run("sweep", "--fixture", "example3", "--grid", "x1=0:1:2", "--grid", "x2=0:1:3")
    pts = [(float(r[0]), float(r[1])) for r in _rows(text)[1:]]
    assert pts == sorted(pts) and len(pts) == 6


def test_example1_sweep_gaps_positive():
    """Stated behaviour: gap_delta > 0 at all 16 grid points of x6 in [0.5, 2]."""
    _, text = run("sweep", "--fixture", "example1", "--grid", "x6=0.5:2:16")
    rows = _rows(text)
    col = rows[0].index("gap_delta")
    gaps = [float(r[col]) for r in rows[1:]]
    assert len(gaps) == 16
    assert all(g > 0 for g in gaps), f"min gap {min(gaps):.6g}"


def test_example1_sweep_regression():
    code, text = run("sweep", "--fixture", "example1", "--grid", "x6=0.5:2:4")
    rows = _rows(text)
    col = rows[0].index("gap_delta")
    gaps = [float(r[col]) for r in rows[1:]]
    assert gaps == pytest.approx([-20 / 9, -5 / 9, -20 / 81, -5 / 36])
    assert code == cli.EXIT_VIOLATION


def test_example5_sweep_gaps_zero():
    """Stated behaviour: gap ≈ 0 for t in [-1, 1]."""
    _, text = run("sweep", "--fixture", "example5", "--grid", "t=-1:1:5")
    rows = _rows(text)
    col = rows[0].index("gap_delta")
    gaps = [float(r[col]) for r in rows[1:]]
    assert len(gaps) == 5
    assert max(abs(g) for g in gaps) < 1e-7, f"gaps {gaps}"
