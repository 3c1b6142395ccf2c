import json

import numpy as np
import pytest

from grushin_qc.cli import main
from grushin_qc.curves import curve_from_record, sample_curve, section5_euclidean_curve
from grushin_qc.distance import snowflake_constant


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_distance_horizontal(capsys):
    code, out, _ = run(capsys, "distance", "--alpha", "1", "--from", "1,0", "--to", "3,0")
    rec = json.loads(out)
    assert code == 0 and rec["schema"] == 1
    assert rec["distance"] == pytest.approx(2.0, rel=1e-9)
    assert rec["polyline"][0] == [1.0, 0.0]


def test_distance_on_Y_reports_history(capsys):
    code, out, _ = run(capsys, "distance", "--alpha", "1", "--from", "0,0", "--to", "0,1")
    rec = json.loads(out)
    assert code == 0
    assert rec["distance"] == pytest.approx(snowflake_constant(1.0), rel=2e-3)
    assert len(rec["refinements"]) >= 2


def test_distance_identity(capsys):
    code, out, _ = run(capsys, "distance", "--alpha", "1", "--from", "0,0", "--to", "0,0")
    assert code == 0 and json.loads(out)["distance"] == 0


def test_distance_non_convergence_exit_code(capsys):
    code, out, _ = run(capsys, "distance", "--alpha", "1", "--from", "0,0", "--to", "0,1", "--tol", "1e-9")
    assert code == 2 and json.loads(out)["converged"] is False


@pytest.mark.parametrize("argv", [
    ("distance", "--from", "1,x", "--to", "0,0"),
    ("distance", "--from", "1,0"),
    ("distance", "--alpha", "-1", "--from", "1,0", "--to", "0,0"),
    ("verify", "nope"),
    ("verify", "section5", "--alpha", "0.5"),
    ("verify", "cantor", "--grid", "8x8"),
    ("frobnicate",),
    (),
])
def test_usage_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "error" in err


def test_verify_fast_suite_passes(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "cantor", "--alpha", "1", "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and rep["schema"] == 1
    assert json.loads((tmp_path / "cantor.json").read_text()) == rep


def test_export_requires_prior_result(capsys, tmp_path):
    for what in ("density", "curve", "profile"):
        code, _, err = run(capsys, "export", what, "--out", str(tmp_path))
        assert code == 1 and "no prior result" in err


def test_export_density_csv(capsys, tmp_path):
    run(capsys, "verify", "phi-conformal", "--grid", "32x32", "--out", str(tmp_path))
    code, out, _ = run(capsys, "export", "density", "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["rows"] == 32 * 32
    lines = (tmp_path / "density.csv").read_text().split("\n")
    assert lines[0] == "i,j,x,y,value"
    assert len(lines) == 32 * 32 + 2 and lines[-1] == ""
    vals = np.array([float(ln.split(",")[4]) for ln in lines[1:-1]])
    assert np.all(vals >= 0) and vals.max() > 0


def test_export_curve_matches_sampler(capsys, tmp_path):
    run(capsys, "verify", "section5", "--grid", "32x32", "--out", str(tmp_path))
    rec = json.loads((tmp_path / "curve.json").read_text())
    code, _, _ = run(capsys, "export", "curve", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "curve.csv").read_text().splitlines()
    got = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    ref = sample_curve(section5_euclidean_curve(0.0, 1.0), rec["n"], rec["grading"], rec["t_min"])
    assert len(got) == rec["n"]
    assert np.array_equal(got[:, 1:], ref.vertices)
    t = np.array([1e-3, 0.1, 0.5])
    assert np.array_equal(curve_from_record(rec["record"])(t), section5_euclidean_curve(0.0, 1.0)(t))


def test_exports_are_byte_identical_on_rerun(capsys, tmp_path):
    argv = ("verify", "quasisymmetry", "--map", "id", "--source", "euclidean", "--target", "euclidean",
            "--seed", "5", "--out", str(tmp_path))
    run(capsys, *argv)
    run(capsys, "export", "profile", "--out", str(tmp_path))
    first_csv = (tmp_path / "profile.csv").read_bytes()
    first_json = (tmp_path / "quasisymmetry.json").read_bytes()
    run(capsys, *argv)
    run(capsys, "export", "profile", "--out", str(tmp_path))
    assert (tmp_path / "profile.csv").read_bytes() == first_csv
    assert (tmp_path / "quasisymmetry.json").read_bytes() == first_json


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"alpha": 2.0, "seed": 9}))
    _, out, _ = run(capsys, "verify", "lemma31", "--config", str(cfg))
    rep = json.loads(out)
    assert rep["config"]["alpha"] == 2.0 and rep["config"]["seed"] == 9
    _, out, _ = run(capsys, "verify", "lemma31", "--config", str(cfg), "--alpha", "1")
    rep = json.loads(out)
    assert rep["config"]["alpha"] == 1.0 and rep["config"]["seed"] == 9
    cfg.write_text(json.dumps({"colour": "blue"}))
    code, _, _ = run(capsys, "verify", "lemma31", "--config", str(cfg))
    assert code == 1
