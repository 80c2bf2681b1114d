import json

import numpy as np

from painleve_torus import cli


def run_cli(capsys, *args):
    code = cli.main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ctx_json(capsys):
    code, out, _ = run_cli(capsys, "ctx", "--tau", "0,1")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["eta1"][0] - np.pi) < 1e-10
    assert abs(doc["g3"][0]) < 1e-10


def test_usage_error_bad_tau(capsys):
    code, _, err = run_cli(capsys, "eval", "--tau", "0,-1", "--z", "0.3,0.2")
    assert code == 1
    assert "Im(tau)" in err


def test_usage_error_missing_flag(capsys):
    code, _, err = run_cli(capsys, "hitchin", "--tau", "0,1", "--r", "0.3")
    assert code == 1
    assert "--s" in err


def test_usage_error_unknown_flag(capsys):
    code, _, err = run_cli(capsys, "ctx", "--tau", "0,1", "--frobnicate", "3")
    assert code == 1


def test_epvi_check_prints_residual(capsys):
    code, out, _ = run_cli(capsys, "epvi-check", "--tau", "0.2,1.1",
                           "--r", "0.3", "--s", "0.2", "--n", "0", "--h", "1e-3")
    assert code == 0
    assert float(out.strip()) < 1e-5


def test_omega_test_member_flag(capsys):
    code, out, _ = run_cli(capsys, "omega-test", "--tau", "0,1",
                           "--p", "0.3,0.1", "--n", "0")
    assert code == 0
    doc = json.loads(out)
    assert doc["member"] is False and doc["witness"] is None


def test_omega_test_half_period_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "omega-test", "--tau", "0,1",
                           "--p", "0.5,0", "--n", "0")
    assert code == 1


def test_omega_scan_csv_roundtrip(tmp_path, capsys):
    out_file = tmp_path / "region.csv"
    code, _, _ = run_cli(capsys, "omega-scan", "--tau", "0,1", "--n", "0",
                         "--res", "16", "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().strip().split("\n")
    assert lines[0] == "r_cell,s_cell,member,witness_r,witness_s,residual"
    assert len(lines) == 1 + 16 * 16


def test_identical_invocations_bit_identical(tmp_path, capsys):
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for f in (f1, f2):
        code, _, _ = run_cli(capsys, "omega-scan", "--tau", "0,1", "--n", "0",
                             "--res", "16", "--out", str(f))
        assert code == 0
    assert f1.read_bytes() == f2.read_bytes()


def test_green_crit_json(capsys):
    code, out, _ = run_cli(capsys, "green-crit", "--tau", "0,1")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["critical_points"]) == 3
    assert all(c["kind"] == "trivial" for c in doc["critical_points"])


def test_mono_structure(capsys):
    code, out, _ = run_cli(capsys, "mono", "--tau", "0.2,1.1",
                           "--r", "0.3", "--s", "0.2", "--n", "0")
    assert code == 0
    doc = json.loads(out)
    assert doc["class"]["variant"] == "completely_reducible"
    assert abs(doc["unitary"]["r"] - 0.3) < 1e-4
    assert abs(doc["unitary"]["s"] - 0.2) < 1e-4
    assert len(doc["N1"]) == 4 and len(doc["N1"][0]) == 2
    assert doc["gamma_plus_defect"] < 1e-6


def test_config_file_merging(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("series-tol = 1e-9  # comment\nthreads = 2\n")
    code, out, _ = run_cli(capsys, "--config", str(cfg), "ctx", "--tau", "0,1")
    assert code == 0
    # flags beat config
    code2, out2, _ = run_cli(capsys, "--config", str(cfg), "ctx", "--tau", "0,1",
                             "--series-tol", "1e-12")
    doc, doc2 = json.loads(out), json.loads(out2)
    assert doc2["series_cutoff"] >= doc["series_cutoff"]


def test_config_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("not_a_key = 1\n")
    code, _, err = run_cli(capsys, "--config", str(cfg), "ctx", "--tau", "0,1")
    assert code == 1
    assert "not_a_key" in err


def test_threads_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("PAINLEVE_TORUS_THREADS", "not-an-int")
    code, _, err = run_cli(capsys, "ctx", "--tau", "0,1")
    assert code == 1
    monkeypatch.setenv("PAINLEVE_TORUS_THREADS", "4")
    code, _, _ = run_cli(capsys, "ctx", "--tau", "0,1")
    assert code == 0


def test_synth_infeasible_exit_code(monkeypatch, capsys):
    # valid real (r, s) always give unitary monodromy; force the guard to
    # confirm the exit-code contract for corrupted parameters
    monkeypatch.setattr(cli.lame, "is_unitary", lambda rep, tol=1e-6: None)
    monkeypatch.setattr(cli.synth, "is_unitary", lambda rep, tol=1e-6: None)
    code, _, err = run_cli(capsys, "synth", "--tau", "0.2,1.1",
                           "--r", "0.3", "--s", "0.2", "--res", "32")
    assert code == 3
    assert "infeasible" in err


def test_eval_outputs_reduction(capsys):
    code, out, _ = run_cli(capsys, "eval", "--tau", "0.2,1.1", "--z", "1.5,0.0")
    assert code == 0
    doc = json.loads(out)
    assert 0 <= doc["r"] < 1 and 0 <= doc["s"] < 1


def test_help_names_constructs(capsys):
    code = cli.main(["hitchin", "--help"])
    out = capsys.readouterr().out
    assert code == 0
    assert "Painleve" in out or "Hitchin" in out
    code = cli.main(["omega-test", "--help"])
    out = capsys.readouterr().out
    assert code == 0
    assert "Omega" in out or "solvability" in out
