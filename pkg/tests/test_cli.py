import json

import pytest

from ymhelix.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, EXIT_SOLVER, build_parser, main


def run(tmp_path, *argv, name="r.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text())


def test_mesh_summary(tmp_path):
    code, rep = run(tmp_path, "mesh", "--mesh", "torus", "--res", "1")
    assert code == EXIT_OK and rep["passed"]
    assert rep["results"]["betti"] == [1, 1, 0, 0]
    assert rep["config"]["mesh"] == "torus"


def test_solve_and_replay(tmp_path):
    code, rep = run(tmp_path, "solve", "--mesh", "box2", "--res", "6", "--seed", "3")
    assert code == EXIT_OK
    code2, rep2 = run(tmp_path, "replay", str(tmp_path / "r.json"), name="again.json")
    assert code2 == EXIT_OK
    rep.pop("config"), rep2.pop("config")
    assert rep == rep2


def test_observe_bracket_hamilton(tmp_path):
    code, rep = run(tmp_path, "observe", "--mesh", "box3", "--res", "3")
    assert code == EXIT_OK and isinstance(rep["results"]["value"], float)
    code, rep = run(tmp_path, "bracket", "--mesh", "box3", "--res", "3", "--gen1", "g1", "--gen2", "g2")
    r = rep["results"]
    assert code == EXIT_OK and r["bracket"] == -r["reverse"]
    code, rep = run(tmp_path, "hamilton", "--mesh", "annulus", "--res", "2", "--cut", "angle:0.1:3.1")
    assert code == EXIT_OK and rep["results"]["discrepancy"] < 1e-11


def test_separate_ab(tmp_path):
    code, rep = run(tmp_path, "separate", "--mesh", "annulus", "--res", "3", "--pair", "ab")
    assert code == EXIT_OK
    assert rep["results"]["verdict"] == "separated" and rep["results"]["relative_error"] <= 0.05


@pytest.mark.parametrize("cmd", ["gauge-fix", "decompose", "harmonic", "boundary-map", "glue"])
def test_other_commands_pass(tmp_path, cmd):
    code, rep = run(tmp_path, cmd, "--mesh", "annulus", "--res", "2")
    assert code == EXIT_OK and rep["passed"]


def test_verify_one_mesh(tmp_path):
    code, rep = run(tmp_path, "verify", "--mesh", "box2", "--res", "4", "--trials", "2")
    assert code == EXIT_OK
    assert all(rec["passed"] for m in rep["results"]["meshes"] for rec in m["records"])


def test_study_writes_csv_and_figure(tmp_path):
    pytest.importorskip("matplotlib")
    code, rep = run(tmp_path, "study", "--kind", "helicity", "--resolutions", "4,8,16", name="s.json")
    assert code == EXIT_OK
    assert (tmp_path / "s.csv").read_text().startswith("res,h,value,exact,error")
    assert (tmp_path / "s.png").stat().st_size > 0
    assert rep["results"]["files"]["figure"].endswith("s.png")


def test_exit_codes(tmp_path):
    # input error: cut that is not a valid hypersurface
    code, rep = run(tmp_path, "observe", "--mesh", "box3", "--res", "3", "--cut", "radial:5")
    assert code == EXIT_INPUT and rep["error"]["kind"] == "CutError"
    # solver failure: tolerance below roundoff
    code, rep = run(tmp_path, "solve", "--mesh", "box3", "--res", "3", "--tol", "1e-30")
    assert code == EXIT_SOLVER and "solve" in rep["error"]
    # invariant failure: a loose solve does not satisfy the field equation
    code, rep = run(tmp_path, "solve", "--mesh", "annulus", "--res", "2", "--tol", "1e-3")
    assert code == EXIT_FAIL and rep["passed"] is False
    # too few resolutions
    code, _ = run(tmp_path, "study", "--kind", "helicity", "--resolutions", "4,8")
    assert code == EXIT_INPUT
    code, rep = run(tmp_path, "replay", str(tmp_path / "missing.json"))
    assert code == EXIT_INPUT


def test_parser_rejects_unknown_mesh():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["mesh", "--mesh", "sphere"])
