#!/usr/bin/env python3
"""
Test script for the symflow command line
"""

from pathlib import Path

import pytest

from src.models import AnalysisPreset, RunConfig, RunDiagnostics
from src.ui.cli_interface import EXIT_OK, EXIT_SOLVER, EXIT_USAGE, ConfigurationManager, build_parser, main

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def empty_config(tmp_path, monkeypatch):
    """An INI with no options, and no SYMFLOW_* variables in the environment"""
    for variable in ("SYMFLOW_SOLVER_CMD", "SYMFLOW_SMT_CACHE", "SYMFLOW_LOG_LEVEL"):
        monkeypatch.delenv(variable, raising=False)
    path = tmp_path / "empty.ini"
    path.write_text("", encoding="utf-8")
    return path


def _rows(path: Path):
    return [line.split("\t") for line in path.read_text(encoding="utf-8").splitlines() if line]


def test_points_to_run(tmp_path, empty_config):
    out = tmp_path / "out"
    code = main(["--config", str(empty_config), "--analysis", "points-to",
                 "--facts", str(FIXTURES / "points_to"), "--out", str(out)])
    assert code == EXIT_OK
    assert sorted(map(tuple, _rows(out / "VarPointsTo.csv"))) == [("this", "h1"), ("v", "h1"), ("w", "h1")]
    diagnostics = dict(_rows(out / "diagnostics.csv"))
    assert diagnostics["analysis"] == "points-to"


def test_missing_fact_directory(tmp_path, empty_config):
    code = main(["--config", str(empty_config), "--analysis", "points-to",
                 "--facts", str(tmp_path / "absent"), "--out", str(tmp_path / "out")])
    assert code == EXIT_USAGE


def test_custom_run_needs_program(tmp_path, empty_config):
    code = main(["--config", str(empty_config), "--facts", str(FIXTURES / "points_to"),
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_USAGE


def test_symexec_bound_one_keeps_entry_blocks(tmp_path, empty_config):
    out = tmp_path / "out"
    code = main(["--config", str(empty_config), "--analysis", "symexec", "--bound", "1",
                 "--facts", str(FIXTURES / "symexec_diamond"), "--out", str(out)])
    assert code == EXIT_OK
    assert {row[2] for row in _rows(out / "Reachable.csv")} == {"b0"}


def test_symexec_native_run(tmp_path, empty_config):
    out = tmp_path / "out"
    code = main(["--config", str(empty_config), "--analysis", "symexec",
                 "--facts", str(FIXTURES / "symexec_diamond"), "--out", str(out)])
    assert code == EXIT_OK
    assert {row[2] for row in _rows(out / "Reachable.csv")} == {"b0", "b1", "b3"}
    diagnostics = dict(_rows(out / "diagnostics.csv"))
    assert int(diagnostics["solver.queries"]) > 0


def test_missing_solver_is_a_solver_failure(tmp_path, empty_config):
    code = main(["--config", str(empty_config), "--analysis", "symexec", "--switch-size", "0",
                 "--facts", str(FIXTURES / "symexec_diamond"), "--out", str(tmp_path / "out")])
    assert code == EXIT_SOLVER


def test_smt_run(tmp_path, empty_config, solver_cmd):
    out = tmp_path / "out"
    code = main(["--config", str(empty_config), "--analysis", "symexec", "--switch-size", "0",
                 "--solver-cmd", solver_cmd, "--cache", str(tmp_path / "smt.cache"),
                 "--facts", str(FIXTURES / "symexec_diamond"), "--out", str(out)])
    assert code == EXIT_OK
    assert {row[2] for row in _rows(out / "Reachable.csv")} == {"b0", "b1", "b3"}
    assert (tmp_path / "smt.cache").exists()


def test_config_layering(tmp_path, monkeypatch):
    ini = tmp_path / "run.ini"
    ini.write_text("[solver]\ncommand = cvc5 --lang smt2\ntimeout = 5\n\n[symexec]\nbound = 3\n",
                   encoding="utf-8")
    monkeypatch.delenv("SYMFLOW_SOLVER_CMD", raising=False)
    monkeypatch.setenv("SYMFLOW_LOG_LEVEL", "DEBUG")

    manager = ConfigurationManager(ini)
    assert manager.get("solver_cmd") == "cvc5 --lang smt2"
    assert manager.get("log_level") == "DEBUG"

    args = build_parser().parse_args(["--analysis", "symexec", "--facts", "f", "--out", "o", "--bound", "5"])
    config = manager.build(args)
    assert config.bound == 5
    assert config.timeout == 5.0
    assert config.solver_cmd == "cvc5 --lang smt2"
    assert config.program.name == "symexec.dl"


def test_environment_overrides_file(tmp_path, monkeypatch):
    ini = tmp_path / "run.ini"
    ini.write_text("[solver]\ncommand = cvc5\n", encoding="utf-8")
    monkeypatch.setenv("SYMFLOW_SOLVER_CMD", "bitwuzla")
    assert ConfigurationManager(ini).get("solver_cmd") == "bitwuzla"


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(facts=Path("f"), out=Path("o"), analysis=AnalysisPreset.POINTS_TO, bound=0)
    config = RunConfig(facts=Path("f"), out=Path("o"), analysis=AnalysisPreset.POINTS_TO)
    assert config.program.name == "pointsto.dl"


def test_diagnostic_rows_are_flat():
    diagnostics = RunDiagnostics(analysis="symexec", seconds=1.5, solver={"queries": 2, "smt": {"sat": 1}},
                                 queries=[("abc", "unknown", "over-bound")])
    rows = dict(diagnostics.rows())
    assert rows["seconds"] == "1.500000"
    assert rows["solver.smt.sat"] == "1"
    assert rows["query.0000"] == "abc unknown over-bound"


def _outputs(out: Path):
    """Every CSV under out, with timing and cache bookkeeping rows left out of diagnostics."""
    tables = {}
    for path in sorted(out.glob("*.csv")):
        rows = _rows(path)
        if path.name == "diagnostics.csv":
            rows = [row for row in rows
                    if not row[0].endswith("seconds") and not row[0].startswith("solver.smt.")]
        tables[path.name] = rows
    return tables


def test_warm_rerun_reuses_the_cache(tmp_path, empty_config, solver_cmd):
    cache = tmp_path / "smt.cache"
    argv = ["--config", str(empty_config), "--analysis", "symexec", "--switch-size", "0",
            "--solver-cmd", solver_cmd, "--cache", str(cache),
            "--facts", str(FIXTURES / "symexec_diamond")]

    assert main(argv + ["--out", str(tmp_path / "cold")]) == EXIT_OK
    cold = dict(_rows(tmp_path / "cold" / "diagnostics.csv"))
    assert int(cold["solver.smt.solver_invocations"]) > 0

    assert main(argv + ["--out", str(tmp_path / "warm")]) == EXIT_OK
    warm = dict(_rows(tmp_path / "warm" / "diagnostics.csv"))
    assert warm["solver.smt.solver_invocations"] == "0"
    assert warm["solver.smt.cache_hits"] == warm["solver.smt.queries"]

    assert _outputs(tmp_path / "warm") == _outputs(tmp_path / "cold")
    assert "Reachable.csv" in _outputs(tmp_path / "cold")
