import csv
import io
import json
import subprocess
import sys

import pytest

from cpk.cli import main
from cpk.core import Scenario, u_total_eigenstate
from cpk.io import bundled_species
from cpk.material import GOLD


def scenario(tmp_path, species="OH", surface="Au", extra=""):
    p = tmp_path / "s.yaml"
    p.write_text(f"schema: 1\nspecies: {species}\nsurface: {surface}\nz_A: 2.0e-6\nT: 0\n{extra}")
    return str(p)


def test_sweep_csv_matches_library(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["sweep", "--scenario", scenario(tmp_path), "--axis", "temperature",
                 "--min", "10", "--max", "300", "--points", "2", "--out", str(out),
                 "--asymptotes", "eq10,eq17", "--per-transition"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["T_K", "U_nr_J", "U_ev_J", "U_total_J", "eq10_J", "eq17_J",
                       "U_nr_t0_J", "U_ev_t0_J", "regime", "far_field_warning", "error"]
    s = Scenario(bundled_species()["OH"], GOLD, 2e-6, 300.0)
    assert float(rows[2][3]) == u_total_eigenstate(s).u_total


def test_sweep_to_stdout_as_json(tmp_path, capsys):
    code = main(["sweep", "--scenario", scenario(tmp_path, "Rb", "perfect"), "--axis", "distance",
                 "--min", "1e-6", "--max", "1e-5", "--points", "3", "--spacing", "log",
                 "--format", "json", "--paths", "exact,closed"])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["rows"]) == 3 and data["rows"][0]["far_field_warning"] is True
    r = data["rows"][1]
    assert r["U_total_exact_J"] == pytest.approx(r["U_total_closed_J"], rel=1e-8, abs=0)


@pytest.mark.parametrize(
    "args",
    [
        ["sweep", "--axis", "temperature"],
        ["sweep", "--scenario", "{s}", "--axis", "temperature", "--min", "1", "--max", "2",
         "--points", "2", "--asymptotes", "eq99"],
        ["sweep", "--scenario", "{s}", "--axis", "temperature", "--min", "2", "--max", "1", "--points", "2"],
        ["sweep", "--scenario", "{s}", "--axis", "temperature", "--min", "1", "--max", "2",
         "--points", "2", "--paths", "closed"],
        ["sweep", "--scenario", "missing.yaml", "--axis", "temperature", "--min", "1", "--max", "2", "--points", "2"],
        ["compare", "--scenario", "{s}", "--tmin", "1", "--tmax", "300", "--points", "5"],
        ["casimir", "--species", "LiH", "--eta", "-1", "--z", "1e-7", "--T", "300"],
        ["casimir", "--species", "Xe", "--eta", "1e24", "--z", "1e-7", "--T", "300"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_1(tmp_path, capsys, args):
    s = scenario(tmp_path)
    with pytest.raises(SystemExit) as info:
        sys.exit(main([a.replace("{s}", s) for a in args]))
    assert info.value.code == 1
    assert capsys.readouterr().err


def test_failed_points_exit_2(tmp_path, capsys):
    s = scenario(tmp_path, "YbF", "Au", "tolerances: {rel_tol: 1.0e-12, max_quad_depth: 1}\n")
    code = main(["sweep", "--scenario", s, "--axis", "temperature", "--min", "10", "--max", "300",
                 "--points", "2"])
    captured = capsys.readouterr()
    assert code == 2
    assert "2 of 2 points failed" in captured.err
    assert "QuadratureError" in captured.out


def test_compare_report(tmp_path):
    out = tmp_path / "r.json"
    code = main(["compare", "--scenario", scenario(tmp_path, "LiH", "perfect"), "--tmin", "1",
                 "--tmax", "300", "--points", "4", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["species"] == "LiH" and len(rep["rows"]) == 4
    assert rep["summary"]["eq10"]["points_in_regime"] == 4


def test_casimir_json(capsys):
    assert main(["casimir", "--species", "LiH", "--eta", "1e24", "--z", "1e-7", "--T", "300"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["energy_closed_J_per_m2"] < 0
    assert out["rel_diff"] < 1e-3 and out["molecule_regime"] is True


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "cpk.cli", "casimir", "--species", "LiH", "--eta", "1e24",
                        "--z", "1e-7", "--T", "300"], capture_output=True, text=True)
    assert r.returncode == 0 and "energy_numerical_J_per_m2" in r.stdout
    r = subprocess.run([sys.executable, "-m", "cpk.cli"], capture_output=True, text=True)
    assert r.returncode == 1
