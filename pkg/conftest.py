"""
Shared pytest fixtures for the Symflow test scripts
"""

import shutil

import pytest

from src.engine.datalog_engine import DatalogEngine
from src.native_solver import NativeSolver, NativeSolverConfig
from src.smt_bridge import BridgeConfig, SmtBridge

# Solvers tried in order; each command keeps the solver reading SMT-LIB2 from stdin.
SOLVER_COMMANDS = (
    ("z3", "z3 -in -smt2"),
    ("cvc5", "cvc5 --lang smt2 --incremental"),
    ("bitwuzla", "bitwuzla --lang smt2"),
)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: exhaustive corpora that take more than a few seconds")


@pytest.fixture(scope="session")
def solver_cmd():
    """First SMT-LIB2 solver found on PATH; tests needing one are skipped otherwise."""
    for binary, command in SOLVER_COMMANDS:
        if shutil.which(binary):
            return command
    pytest.skip("no SMT solver (z3, cvc5 or bitwuzla) on PATH")


@pytest.fixture
def bridge(solver_cmd, tmp_path):
    with SmtBridge(BridgeConfig(solver_cmd=solver_cmd, timeout=30, cache_path=tmp_path / "smt.cache")) as b:
        yield b


@pytest.fixture
def offline_bridge():
    """Bridge without a solver: printing and cache only."""
    return SmtBridge(BridgeConfig(solver_cmd=None))


@pytest.fixture(scope="session")
def native():
    return NativeSolver(NativeSolverConfig(max_size=10))


@pytest.fixture
def engine():
    return DatalogEngine()
