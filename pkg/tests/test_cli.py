"""Command-line entry points and exit-code contract."""

import os

import pytest

from parabolab.cli import run

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")
DEMO = os.path.join(CONFIGS, "demo.cfg")
SMALL = os.path.join(CONFIGS, "sweep_small.cfg")


def test_ledger_prints_reference_row(capsys):
    assert run(["ledger", "--N", "2", "--q", "4"]) == 0
    out = capsys.readouterr().out
    assert "chi" in out and "1.5" in out
    assert "final" in out
    assert "5" in out


def test_ledger_rejects_critical_exponent():
    assert run(["ledger", "--N", "2", "--q", "2"]) == 2


def test_solve_reports_and_exports(tmp_path, capsys):
    assert run(["solve", "--config", DEMO, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "sup" in out
    assert os.path.exists(os.path.join(tmp_path, "solution.txt"))


def test_diagnose_check_passes_on_the_demo(capsys):
    assert run(["diagnose", "--config", DEMO, "--check"]) == 0
    out = capsys.readouterr().out
    assert "check l1: PASS" in out
    assert "check interpolation: PASS" in out
    assert "check ladder_monotone: PASS" in out
    assert "check data_contraction: PASS" in out


def test_diagnose_writes_trace_and_report(tmp_path):
    assert run(["diagnose", "--config", DEMO, "--out", str(tmp_path)]) == 0
    assert os.path.exists(os.path.join(tmp_path, "trace.csv"))
    assert os.path.exists(os.path.join(tmp_path, "report.txt"))


def test_sweep_writes_all_artifacts(tmp_path, capsys):
    code = run(["sweep", "--config", SMALL, "--out", str(tmp_path),
                "--eps-list", "0.3535533905932738,0.25"])
    assert code == 0
    for name in ("sweep.csv", "sweep.svg", "trace.csv", "ledger.txt"):
        assert os.path.exists(os.path.join(tmp_path, name)), name
    header = open(os.path.join(tmp_path, "sweep.csv")).readline().strip()
    assert header == "eps,f_norm_crit,f_norm_q,phi_sup,implied_c,exp_moment,l1_lhs,l1_rhs"


def test_missing_config_is_a_usage_error():
    assert run(["solve", "--config", "/nonexistent/path.cfg"]) == 1


def test_unknown_flag_is_a_usage_error():
    assert run(["solve", "--config", DEMO, "--frobnicate"]) == 1


def test_help_exits_clean(capsys):
    assert run(["--help"]) == 0
    assert "sweep" in capsys.readouterr().out


def test_sweep_without_sweep_section_fails_cleanly():
    assert run(["sweep", "--config", DEMO]) == 1
