import csv
import json
import subprocess
import sys

import pytest

from flatspot.cli import main


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main(["--out", str(out), *argv])
    return code, out


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_validate_canonical(tmp_path):
    code, out = run(tmp_path, "validate")
    assert code == 0
    doc = json.loads((out / "validation.json").read_text())
    assert doc["usable"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert "validation.json" in manifest["files"]
    assert manifest["versions"]["kernel"] in ("mpfr", "python")


def test_polynomial_family_refused(tmp_path, capsys):
    cfg = tmp_path / "poly.json"
    cfg.write_text(json.dumps({"map": {"family": "polynomial", "b": "0.5", "t": "0"}}))
    code, _ = run(tmp_path, "--config", str(cfg), "validate")
    assert code == 4
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "monotonicity violated" in err["message"]


def test_polynomial_family_refused_by_table(tmp_path, capsys):
    cfg = tmp_path / "poly.json"
    cfg.write_text(json.dumps({"family": "polynomial", "b": "0.5", "t": "0"}))
    code, _ = run(tmp_path, "--config", str(cfg), "table", "--depth", "5")
    assert code == 4
    assert json.loads(capsys.readouterr().err)["error"] == "ValidationRejected"


def test_shallow_depth_is_config_error(tmp_path, capsys):
    code, out = run(tmp_path, "table", "--depth", "2")
    assert code == 2
    assert json.loads(capsys.readouterr().err)["exit_code"] == 2
    assert not (out / "table.csv").exists()


def test_search_margin(tmp_path):
    assert run(tmp_path, "find-t", "--depth", "5", "--search-margin", "0")[0] == 2
    cfg = tmp_path / "opts.json"
    cfg.write_text(json.dumps({"family": "canonical", "b": "0.5", "t": "0", "nu": "3",
                               "options": {"search_margin": 1}}))
    code, out = run(tmp_path, "--config", str(cfg), "find-t", "--depth", "5")
    assert code == 0
    assert json.loads((out / "find_t_target.json").read_text())["level_goal"] == 6


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert run(tmp_path, "--config", str(cfg), "validate")[0] == 2
    cfg.write_text(json.dumps({"family": "canonical", "b": "0.5"}))
    assert run(tmp_path, "--config", str(cfg), "validate")[0] == 2


def test_budget_exhaustion_exit_code(tmp_path):
    cfg = tmp_path / "rigid.json"
    cfg.write_text(json.dumps({"family": "rigid", "t": "0.6180339887498948482045868343656"}))
    code, _ = run(tmp_path, "--config", str(cfg), "--max-iters", "100", "rho", "--tol", "1e-12")
    assert code == 3


def test_rho_rational(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"family": "canonical", "b": "0.5", "t": "0.25", "nu": "3"}))
    code, out = run(tmp_path, "--config", str(cfg), "rho")
    assert code == 0
    doc = json.loads((out / "rho.json").read_text())
    assert doc["kind"] == "rational" and doc["p"] == 0 and doc["q"] == 1


def test_table_is_deterministic(tmp_path):
    a = run(tmp_path, "table", "--depth", "8", name="a")
    b = run(tmp_path, "table", "--depth", "8", name="b")
    assert a[0] == b[0] == 0
    ta = (a[1] / "table.csv").read_bytes()
    assert ta == (b[1] / "table.csv").read_bytes()
    rows = read_csv(a[1] / "table.csv")
    assert rows[0] == ["n", "y_n", "sigma_n", "mu_n", "mu_flag"]
    assert [int(r[0]) for r in rows[1:]] == list(range(2, 9))


def test_table_resume_uses_checkpoint(tmp_path):
    code, out = run(tmp_path, "table", "--depth", "6")
    assert code == 0
    first = json.loads((out / "find_t_target.json").read_text())
    code = main(["--out", str(out), "table", "--depth", "6", "--resume"])
    assert code == 0
    assert json.loads((out / "find_t_target.json").read_text())["t"] == first["t"]


def test_table_mixed_format(tmp_path, capsys):
    code, out = run(tmp_path, "--mixed-format", "table", "--depth", "8")
    assert code == 0
    rows = read_csv(out / "table.csv")
    # four significant figures without the leading zero
    assert rows[1][1].startswith(".") and len(rows[1][1]) == 5
    assert "extrapolated limit" in capsys.readouterr().out


def test_extended_table_and_residuals(tmp_path):
    code, out = run(tmp_path, "table", "--depth", "10", "--residual-levels", "5:7")
    assert code == 0
    assert (out / "table_extended.csv").exists()
    rows = read_csv(out / "residuals.csv")
    assert rows[0][:3] == ["relation", "n", "i"]
    assert {r[0] for r in rows[1:]} >= {"preimage", "recursion"}


def test_orbit_closest_returns(tmp_path):
    code, out = run(tmp_path, "orbit", "--depth", "8", "--search")
    assert code == 0
    rows = read_csv(out / "closest_returns.csv")
    assert rows[0] == ["n", "q_n", "y_n"]
    assert [int(r[1]) for r in rows[1:4]] == [1, 2, 3]


def test_matrices_three(tmp_path):
    code, out = run(tmp_path, "matrices", "--nu", "3", "--length", "50", "--trials", "4", "--cap", "40")
    assert code == 0
    doc = json.loads((out / "find_n.json").read_text())
    assert doc["N"] >= 1 and doc["worst_norm"] < 0.8
    assert read_csv(out / "matrices.csv")[0] == ["n", "alpha_n", "beta_n", "opnorm_of_window"]


def test_matrices_two_reports_cap(tmp_path):
    code, out = run(tmp_path, "matrices", "--nu", "2", "--length", "20", "--trials", "2", "--cap", "30")
    assert code == 0
    assert json.loads((out / "find_n.json").read_text())["N"] is None


def test_matrices_empty_weight_file(tmp_path):
    b = tmp_path / "b.txt"
    b.write_text("")
    code, _ = run(tmp_path, "matrices", "--b-file", str(b))
    assert code == 2


def test_geometry_outputs(tmp_path):
    code, out = run(tmp_path, "geometry", "--levels", "2:7", "--alpha-grid", "0.6,0.8,1.0")
    assert code == 0
    deficit = {int(r[0]): r[1] for r in read_csv(out / "deficit.csv")[1:]}
    s1 = {int(r[0]): r[2] for r in read_csv(out / "hausdorff.csv")[1:] if r[1] == "1.0"}
    # S_n(1) is the total hole length
    assert s1 == deficit
    doc = json.loads((out / "geometry.json").read_text())
    assert doc["strictly_decreasing"]


def test_geometry_inconclusive_window(tmp_path):
    code, out = run(tmp_path, "geometry", "--levels", "2:7", "--alpha-grid", "0.1,0.2")
    assert code == 0
    doc = json.loads((out / "geometry.json").read_text())
    assert doc["verdict"] == "inconclusive" and doc["alpha_star"] is None


def test_dichotomy_single_nu(tmp_path):
    code, out = run(tmp_path, "dichotomy", "--nu-list", "3", "--depth", "8", "--n-from", "4")
    assert code == 0
    doc = json.loads((out / "dichotomy.json").read_text())
    assert list(doc) == ["3"]
    assert read_csv(out / "dichotomy.csv")[0] == ["n", "sigma_nu3"]


def test_params_small(tmp_path):
    code, out = run(tmp_path, "params", "--levels", "4:6")
    assert code == 0
    rows = read_csv(out / "params.csv")
    assert rows[0][-1] == "delta_over_sigma_pow_nu"
    assert [int(r[0]) for r in rows[1:]] == [4, 5, 6]


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "flatspot.cli", "--out", str(tmp_path / "o"), "validate"],
                         capture_output=True, text=True)
    assert res.returncode == 0
