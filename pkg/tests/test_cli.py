import csv
import io
import json
import math
import subprocess
import sys

import pytest

from meshratio import acceptance, catalog, cli, covering, riesz


def run_cli(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_special_then_diagnose_round_trip(capsys, monkeypatch):
    code, special, _ = run_cli(capsys, "special", "sbp-inf")
    assert code == 0
    payload = json.loads(special)
    assert payload["meta"]["seed"] == 0
    assert payload["meta"]["invocation"] == "meshratio special sbp-inf"
    code, out, _ = run_cli(capsys, "diagnose", "-", "--json", stdin=special, monkeypatch=monkeypatch)
    assert code == 0
    report = json.loads(out)
    expected = covering.diagnose(catalog.sbp_inf()).to_dict()
    for key in ("delta", "eta", "gamma", "contact_edges", "method"):
        assert report[key] == expected[key]
    assert report["gamma"] == pytest.approx(1.0, abs=1e-12)


def test_diagnose_from_file_and_out(tmp_path, capsys):
    cfg_path = tmp_path / "bp.json"
    cfg_path.write_text(catalog.bp().to_json())
    out_path = tmp_path / "report.txt"
    assert cli.run(["diagnose", str(cfg_path), "--out", str(out_path)]) == 0
    text = out_path.read_text()
    assert text.startswith("# meshratio ")
    assert "seed=0" in text.splitlines()[0]
    assert any(line.startswith("gamma") for line in text.splitlines())


def test_repeated_runs_are_byte_identical(capsys):
    args = ["minimize", "--n", "6", "--s", "3", "--restarts", "3", "--seed", "4"]
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second
    assert json.loads(first)["result"]["converged"]


def test_energy_and_hessian(tmp_path, capsys):
    cfg_path = tmp_path / "bp.json"
    cfg_path.write_text(catalog.bp().to_json())
    code, out, _ = run_cli(capsys, "energy", str(cfg_path), "--s", "2", "--json")
    assert code == 0
    assert json.loads(out)["energy"] == pytest.approx(8.5, rel=1e-14)
    code, out, _ = run_cli(capsys, "hessian", str(cfg_path), "--s", "22", "--json")
    data = json.loads(out)
    assert data["min_constrained_eig"] < 0
    assert data["min_constrained_eig"] == pytest.approx(riesz.min_constrained_eig(catalog.bp(), 22.0), rel=1e-12)
    code, out, _ = run_cli(capsys, "hessian", str(cfg_path), "--s", "20", "--show", "2")
    assert code == 0
    assert "min_constrained_eig" in out


def test_sstar(capsys):
    code, out, _ = run_cli(capsys, "sstar", "--json")
    assert code == 0
    assert json.loads(out)["s_star"] == pytest.approx(15.0480773, abs=1e-6)


def test_cantor_command(capsys):
    code, out, _ = run_cli(capsys, "cantor", "--k", "3", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["delta"]["fraction"] == "1/27"
    assert data["eta"]["fraction"] == "1/3"
    assert data["gamma"]["fraction"] == "9"
    code, out, _ = run_cli(capsys, "cantor", "--k", "2")
    assert "gamma" in out and "3 = 3" in out


def test_sweep_csv(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--s-min", "15", "--s-max", "15.1", "--step", "0.05")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# meshratio")
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert rows[0][0] == "s" and len(rows) == 4
    assert math.isnan(float(rows[1][-1]))


def test_continue_small(capsys):
    code, out, _ = run_cli(capsys, "continue", "--n", "4", "--s-min", "4", "--s-max", "50", "--restarts", "2")
    assert code == 0
    data = json.loads(out)
    assert data["stages"][-1]["s"] == 50.0
    assert data["delta_estimate"] < math.sqrt(8 / 3)


@pytest.mark.parametrize(
    "argv",
    [
        ["cantor", "--k", "0"],
        ["minimize", "--n", "1", "--s", "2"],
        ["energy", "/nonexistent/file.json", "--s", "2"],
        ["special", "q-t"],
        ["sweep", "--s-min", "5", "--s-max", "2"],
    ],
)
def test_domain_errors_exit_1(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 1
    assert err.startswith("error:")
    assert out == ""


def test_malformed_config_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 2, "points": [[2, 0, 0], [0, 0, 1]]}')
    code, _, err = run_cli(capsys, "diagnose", str(bad))
    assert code == 1 and "norm" in err


@pytest.mark.parametrize("argv", [[], ["bogus"], ["energy", "x.json"], ["special", "dodecahedron"]])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as info:
        cli.run(argv)
    assert info.value.code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "meshratio", "special", "antipodal"], capture_output=True, text=True, check=True
    )
    assert json.loads(proc.stdout)["points"] == [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]


def test_negative_control_detects_broken_closed_form(monkeypatch):
    assert acceptance.run_criterion(13).passed
    original = riesz.energy_bp_closed
    monkeypatch.setattr(riesz, "energy_bp_closed", lambda s: original(s) * (1 + 1e-6))
    result = acceptance.run_criterion(13)
    assert not result.passed
    assert result.line().startswith("[FAIL]")
