import csv
import json
import shutil
from pathlib import Path

import pytest

from bvlab import cli
from bvlab.cli import Report, emit_report, main, run_scenario
from bvlab.domains import Rectangle
from bvlab.elliptic import RealEllipticSystem
from bvlab.fields import X
from bvlab.serialize import dumps, system_to_json

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _write(path, obj):
    path.write_text(dumps(obj))
    return str(path)


def _cr(tmp_path):
    return _write(
        tmp_path / "cr.json", system_to_json(RealEllipticSystem(Rectangle(0, 1, 0, 1), a11=1, a22=1))
    )


def _variable_alpha():
    return RealEllipticSystem(Rectangle(0, 1, 0, 1), a11=1, a22=1 + X / 2)


def test_empty_report_is_valid(tmp_path):
    paths = emit_report(Report("empty"), tmp_path)
    rep = json.loads(Path(paths[0]).read_text())
    assert rep == {"checks": [], "command": "empty", "data": {}, "failures": [], "passed": True}
    assert (tmp_path / "summary.txt").read_text().startswith("empty: PASS")


def test_mass_sweep_csv(tmp_path):
    status = main(["mass", "--t", "0.5", "1", "1.5", "--n", "512", "--out-dir", str(tmp_path)])
    assert status == 0
    rows = list(csv.reader((tmp_path / "mass.csv").open()))
    assert rows[0] == ["t", "mass", "estimate", "error"]
    for (t, m, _, _), exact in zip(rows[1:], (0.7853981633974483, 3.141592653589793, 7.0685834705770345)):
        assert abs(float(m) - exact) <= 2e-2 * exact


def test_verify_cauchy_riemann(tmp_path):
    assert main(["verify", _cr(tmp_path), "--out-dir", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["passed"] and rep["checks"]
    for c in rep["checks"]:
        if c["name"] not in ("im_lambda_positive", "mu_inside_disk"):
            assert c["value"] <= 1e-12


def test_failure_names_identity(tmp_path, capsys):
    sysf = _write(tmp_path / "va.json", system_to_json(_variable_alpha()))
    status = main(
        ["derive", sysf, "--grid", "32", "--tolerance-profile", "strict", "--out-dir", str(tmp_path / "o")]
    )
    assert status == 1
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert "transport" in rep["failures"]
    assert "FAIL transport" in capsys.readouterr().out


def test_derive_grid_uses_grid_profile(tmp_path):
    sysf = _write(tmp_path / "va.json", system_to_json(_variable_alpha()))
    assert main(["derive", sysf, "--grid", "64", "--out-dir", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "bv.json").exists()


def test_convergence_scenario(tmp_path):
    params = {"N": [32, 64, 128, 256], "cases": ["variable_alpha"]}
    sc = _write(tmp_path / "conv.json", {"kind": "convergence", "inputs": {}, "parameters": params})
    assert run_scenario(sc, str(tmp_path / "o")) == 0
    rows = list(csv.reader((tmp_path / "o" / "convergence.csv").open()))
    assert rows[0] == ["case", "n", "h", "residual", "order"]
    orders = [float(r[4]) for r in rows[2:]]
    assert len(orders) == 3 and all(1.7 <= o <= 2.3 for o in orders)


def test_scenario_files_run(tmp_path):
    for name in ("mass_family", "verify_cr", "reduce_ellipse"):
        assert run_scenario(str(SCENARIOS / f"{name}.json"), str(tmp_path / name)) == 0, name


def test_report_is_byte_identical(tmp_path):
    sc = str(SCENARIOS / "verify_cr.json")
    run_scenario(sc, str(tmp_path / "a"))
    run_scenario(sc, str(tmp_path / "b"))
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_seeded_suite_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["verify", "--seed", "42", "--out-dir", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


@pytest.mark.parametrize("N", [8, 100, 4096])
def test_scenario_rejects_bad_N(tmp_path, N, capsys):
    sc = _write(tmp_path / "s.json", {"kind": "mass", "inputs": {}, "parameters": {"N": N}})
    assert main(["run", sc, "--out-dir", str(tmp_path)]) == 2
    assert "error [schema]" in capsys.readouterr().err


def test_scenario_rejects_unknown_kind(tmp_path, capsys):
    sc = _write(tmp_path / "s.json", {"kind": "bake", "inputs": {}})
    assert main(["run", sc]) == 2
    assert "error [schema]" in capsys.readouterr().err


def test_scenario_missing_input(tmp_path, capsys):
    sc = _write(tmp_path / "s.json", {"kind": "reduce", "inputs": {"bv": "nowhere.json"}})
    assert main(["run", sc]) == 2
    assert "not found" in capsys.readouterr().err


def test_stage_error_names_stage(tmp_path, capsys):
    bad = RealEllipticSystem(Rectangle(0, 1, 0, 1), a11=1, a22=1, a12=-1, a21=-1)
    assert (
        main(["derive", _write(tmp_path / "bad.json", system_to_json(bad)), "--out-dir", str(tmp_path)]) == 2
    )
    assert "error [structure_data]" in capsys.readouterr().err


def test_subcommands_on_sample_inputs(tmp_path):
    s = SCENARIOS
    runs = [
        ["gauge", s / "disk_B_z.json", s / "gauge_expz.json"],
        ["pullback", s / "disk_B_z.json", s / "affine.json"],
        ["zeros", s / "field_z.json", s / "unit_disk.json", "--expect", "1"],
        ["zeros", s / "field_one.json", s / "unit_disk.json", "--expect", "0"],
        ["cauchy", s / "field_one.json", s / "unit_disk.json", "--x", "0.3", "--y", "0.2"],
        ["check-uniqueness", "--samples", "1000"],
        ["check-f-scaling", "--r", "0.3333333333333333", "2", "10"],
        ["reduce", s / "ellipse_mu_third.json"],
    ]
    for k, argv in enumerate(runs):
        out = tmp_path / str(k)
        assert main([str(a) for a in argv] + ["--out-dir", str(out)]) == 0, argv
        assert (out / "report.json").exists()
    cauchy = json.loads((tmp_path / "4" / "report.json").read_text())["data"]["cauchy"]
    assert abs(complex(*cauchy["value"]) - (0.3 - 0.2j)) <= 2e-2 * abs(0.3 - 0.2j)


def test_console_script_installed():
    assert shutil.which("bvlab") is not None
    assert cli.build_parser().prog
