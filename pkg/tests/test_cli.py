import json
import math
import subprocess
import sys

import pytest

from bubbletower.cli import fmt_number, parse_number, run, to_json


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_masses_b2_json(capsys):
    code, out, _ = _run(capsys, "masses", "--a", "1", "--b", "2", "--alpha1", "2", "--alpha2", "2",
                        "--k", "4", "--format", "json")
    assert code == 0
    assert json.loads(out) == {"m1_over_2pi": 6, "m2_over_2pi": 8}
    assert out.strip() == '{"m1_over_2pi": 6, "m2_over_2pi": 8}'


def test_masses_product_form(capsys):
    code, out, _ = _run(capsys, "masses", "--preset", "g2", "--k", "6", "--product")
    assert code == 0 and json.loads(out) == {"m1_over_2pi": 12, "m2_over_2pi": 20}


def test_kmax_g2(capsys):
    code, out, _ = _run(capsys, "kmax", "--a", "1", "--b", "3", "--alpha1", "2", "--alpha2", "2")
    assert code == 0 and json.loads(out)["kmax"] == 6
    code, out, _ = _run(capsys, "kmax", "--preset", "sinh")
    assert json.loads(out) == {"kmax": None, "infinite": True}


def test_identities(capsys):
    code, out, _ = _run(capsys, "identities", "--beta", "2")
    data = json.loads(out)
    assert code == 0
    assert data["step4"] == pytest.approx([-4 * math.pi, -4 * math.pi], rel=1e-8)
    assert data["bubble_mass"] == pytest.approx(8 * math.pi, rel=1e-8)


def test_betas_and_mass_table_csv(capsys):
    code, out, _ = _run(capsys, "betas", "--preset", "b2", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["ell,beta", "1,2", "2,6", "3,4", "4,2"]
    code, out, _ = _run(capsys, "mass-table", "--preset", "b2", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "k,orientation,m1_over_2pi,m2_over_2pi"
    assert len(lines) == 8


def test_symmetry(capsys):
    code, out, _ = _run(capsys, "symmetry", "--preset", "a2")
    assert code == 0 and json.loads(out)["m"] == 3
    code, out, _ = _run(capsys, "symmetry", "--preset", "a2", "--divisors-only")
    assert json.loads(out)["m"] == 4


def test_deltas_and_dump(capsys):
    code, out, _ = _run(capsys, "deltas", "--preset", "a2", "--k", "2", "--log10-lambda", "-6")
    data = json.loads(out)
    assert code == 0
    assert data["log_deltas"] == pytest.approx([-15.894952099644110, -4.1470248200510138], abs=1e-12)
    code, out, _ = _run(capsys, "tower-dump", "--preset", "a2", "--k", "2", "--log10-lambda", "-6",
                        "--points", "5", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "s,W1,W2,Theta_active,log|R1|,sign1,log|R2|,sign2"
    assert len(lines) == 6


def test_sweeps_parallel_order(capsys):
    args = ["residual-sweep", "--preset", "a2", "--k", "2", "--log10-lambda", "-6", "-7", "-8", "--format", "csv"]
    _, serial, _ = _run(capsys, *args)
    _, parallel, _ = _run(capsys, *args, "--jobs", "3")
    assert serial == parallel
    rows = serial.splitlines()
    assert rows[0] == "log10_lambda,norm1,norm2,slope_so_far"
    assert [r.split(",")[0] for r in rows[1:]] == ["-6", "-7", "-8"]
    code, out, _ = _run(capsys, "theta-sup", "--preset", "b2", "--k", "4", "--coupled", "--log10-lambda", "-6")
    assert code == 0 and len(json.loads(out)["rows"]) == 4


def test_kernel(capsys):
    code, out, _ = _run(capsys, "kernel", "--alpha", "2", "--m", "1", "--samples", "20")
    data = json.loads(out)
    assert code == 0
    assert len(data["bounded_modes"]) == 3
    assert data["max_ode_residual"] <= 1e-8


def test_newton_and_exit_codes(capsys):
    code, out, _ = _run(capsys, "newton", "--preset", "a2", "--k", "1", "--log10-lambda", "-6")
    data = json.loads(out)
    assert code == 0 and data["converged"] is True
    assert data["masses"]["m1_over_2pi"] == pytest.approx(2.0, rel=1e-2)
    code, out, _ = _run(capsys, "newton", "--preset", "a2", "--k", "2", "--log10-lambda", "-4", "--max-iter", "0")
    assert code == 3
    code, _, err = _run(capsys, "newton", "--preset", "a2", "--k", "3", "--log10-lambda", "-6")
    assert code == 2 and "admissible" in err
    code, out, _ = _run(capsys, "newton", "--preset", "a2", "--k", "1", "--log10-lambda", "-6", "--dump",
                        "--nodes-per-unit", "10", "--format", "csv")
    assert out.splitlines()[0] == "s,u1,u2,W1,W2,phi1,phi2"


def test_continuation(capsys):
    code, out, _ = _run(capsys, "continuation", "--preset", "a2", "--k", "1", "--log10-lambda-start", "-5",
                        "--log10-lambda-end", "-8", "--steps", "4")
    data = json.loads(out)
    assert code == 0 and data["completed"] is True and len(data["rows"]) == 4
    code, _, _ = _run(capsys, "continuation", "--preset", "a2", "--k", "4", "--log10-lambda-start", "-5",
                      "--log10-lambda-end", "-8")
    assert code == 2


def test_validation_errors(capsys):
    assert _run(capsys, "masses", "--preset", "b2", "--k", "9")[0] == 2
    assert _run(capsys, "mass-table", "--preset", "sinh")[0] == 2
    assert _run(capsys, "masses", "--k", "2")[0] == 2
    assert _run(capsys, "masses", "--preset", "b2", "--k", "2", "--unknown-flag")[0] == 2
    assert _run(capsys, "frobnicate")[0] == 2
    assert _run(capsys, "masses", "--a", "-1", "--b", "1", "--alpha1", "1", "--alpha2", "1", "--k", "1")[0] == 2


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# B2 system\na = 1\nb = 2\nalpha1 = 2\nalpha2 = 2\nk = 3\n")
    code, out, _ = _run(capsys, "masses", "--config", str(cfg))
    assert code == 0 and json.loads(out) == {"m1_over_2pi": 6, "m2_over_2pi": 6}
    code, out, _ = _run(capsys, "masses", "--config", str(cfg), "--k", "4")
    assert json.loads(out) == {"m1_over_2pi": 6, "m2_over_2pi": 8}
    bad = tmp_path / "bad.cfg"
    bad.write_text("not a pair\n")
    assert _run(capsys, "masses", "--config", str(bad))[0] == 2


def test_output_dir_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BUBBLETOWER_OUTPUT_DIR", str(tmp_path))
    code, out, _ = _run(capsys, "kmax", "--preset", "b2", "--output", "sub/kmax.json")
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "sub" / "kmax.json").read_text())["kmax"] == 4


def test_deterministic_and_roundtrip(capsys):
    args = ["residual-sweep", "--preset", "b2", "--k", "2", "--log10-lambda", "-5", "-6", "-7"]
    _, a, _ = _run(capsys, *args)
    _, b, _ = _run(capsys, *args)
    assert a == b
    data = json.loads(a)
    for row in data["rows"]:
        for key in ("norm1", "norm2"):
            assert float(fmt_number(row[key])) == row[key]


def test_formatting_helpers():
    assert fmt_number(0.1) == "0.10000000000000001"
    assert fmt_number(float("nan")) == "null"
    assert to_json({"x": [1, 2.5]}) == '{"x": [1, 2.5]}'
    assert parse_number("3/2") == parse_number("1.5")
    assert isinstance(parse_number("1e-3"), float)


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "bubbletower.cli", "kmax", "--preset", "a2"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["kmax"] == 3
