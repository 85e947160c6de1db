"""Command-line surface: exit codes, JSON mode, artifact determinism."""

import json
import os
from pathlib import Path

import pytest

from confmod.cli import (EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_VERIFICATION,
                         run)

FRAME = str(Path(__file__).resolve().parent.parent / "fixtures" / "frame.toml")

CHEAP = ["--grid-h0", "0.3", "--levels", "1"]


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        run([])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        run(["frobnicate"])
    assert err.value.code == 2
    # modulus needs a target
    with pytest.raises(SystemExit) as err:
        run(["modulus"])
    assert err.value.code == 2


def test_gamma_on_file_and_builtin_name(capsys):
    assert run(["gamma", "--domain", FRAME]) == EXIT_OK
    from_file = capsys.readouterr().out
    assert "gamma = 0.8" in from_file
    assert run(["gamma", "--domain", "frame", "--json"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["gamma"] == pytest.approx(0.8, abs=1e-12)
    assert payload["error"] >= 0.0


def test_modulus_annulus_anchor(capsys):
    assert run(["modulus", "--annulus", "1,2", "--json"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["modulus"] == pytest.approx(0.110318, abs=1e-5)
    assert payload["closed_form"] == pytest.approx(0.1103178001, abs=1e-9)
    assert run(["modulus", "--annulus", "1,oops"]) == EXIT_CONFIG


def test_quad_command_reports_both_moduli(capsys):
    code = run(["quad", "--domain", FRAME, "--H", "1", *CHEAP, "--json"])
    assert code == EXIT_OK
    row = json.loads(capsys.readouterr().out)["rows"][0]
    assert row["H"] == 1.0
    assert row["m_Q"] > 0 and row["m_P"] > 0


def test_config_errors_exit_3(capsys):
    assert run(["gamma", "--domain", "/no/such/file.toml"]) == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err
    assert run(["sweep", "--domain", "frame", "--H", "4,x"]) == EXIT_CONFIG
    assert run(["sweep", "--domain", "frame", "--H", "4,2"]) == EXIT_CONFIG
    # too little ladder span to judge the claims
    assert run(["verify", "--domain", "frame", "--H", "4,8,16",
                *CHEAP]) == EXIT_CONFIG


def test_solver_failures_exit_4(capsys):
    code = run(["modulus", "--domain", "frame", "--grid-h0", "2.0",
                "--levels", "1"])
    assert code == EXIT_SOLVER
    assert "solver error [" in capsys.readouterr().err


def test_oracle_pass_and_fail(capsys):
    base = ["oracle", "--domain", "frame", "--gap-cells", "4"]
    assert run([*base, "--tol", "0.5"]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out
    assert run([*base, "--tol", "1e-9"]) == EXIT_VERIFICATION
    out = capsys.readouterr().out
    assert "FAIL" in out


def test_oracle_json_payload(capsys):
    code = run(["oracle", "--domain", "frame", "--gap-cells", "4",
                "--tol", "0.5", "--json"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"] is True
    assert payload["rows"][0]["rel_diff"] == payload["worst"]


def test_sweep_csv_is_deterministic(tmp_path, capsys):
    args = ["sweep", "--domain", FRAME, "--H", "1,2", *CHEAP]
    run([*args, "--out", str(tmp_path / "a")])
    run([*args, "--out", str(tmp_path / "b")])
    capsys.readouterr()
    first = (tmp_path / "a" / "sweep.csv").read_bytes()
    second = (tmp_path / "b" / "sweep.csv").read_bytes()
    assert first == second
    header = first.decode().splitlines()[0]
    assert header == ("H,m_omega,m_omega_err,gamma,ratio,bound_ok,"
                      "m_Q,m_P,grotzsch_gap,additivity_ratio,mP_over_logH")


def test_sweep_without_out_prints_the_table(capsys):
    assert run(["sweep", "--domain", "frame", "--H", "1,2", *CHEAP]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("H,m_omega")
    assert len(out) == 3


def test_maps_audit(capsys):
    assert run(["maps", "--json"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["mu_at_inv_sqrt2"] == pytest.approx(1.5707963267948966,
                                                       abs=1e-12)
    assert payload["teichmuller_log_ratio_at_1e6"] == pytest.approx(1.0,
                                                                    abs=1e-3)
    assert payload["halfplane_g_at_1"] == pytest.approx([0.0, 0.0], abs=1e-12)
    assert payload["halfplane_g_at_minus_1"] == pytest.approx([0.0, -1.0],
                                                              abs=1e-12)
    assert payload["mobius_worst_circle_deviation"] < 1e-10
    assert payload["dilatation_monotone_ok"] is True
    ks = [row["K"] for row in payload["dilatation"]]
    assert ks == sorted(ks, reverse=True)


def test_thread_cap_env(monkeypatch, capsys):
    monkeypatch.setenv("CONFMOD_THREADS", "3")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        monkeypatch.delenv(var, raising=False)
    assert run(["maps"]) == EXIT_OK
    capsys.readouterr()
    assert os.environ["OMP_NUM_THREADS"] == "3"
    assert os.environ["MKL_NUM_THREADS"] == "3"
