"""
CLI Interface for Symflow

This module provides the batch command line: load a Datalog program and its facts,
configure the solvers, evaluate, and write output relations plus diagnostics.
"""

import argparse
import configparser
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from .. import __version__
from ..analyses import CustomAnalysis, DispatchConfig, PointsToAnalysis, SolverDispatch, SymexecAnalysis
from ..analyses.analysis import Analysis
from ..engine.datalog_engine import EngineConfig
from ..engine.errors import DatalogError, FactIOError
from ..expr.errors import ExprError
from ..models import AnalysisPreset, RunConfig, RunDiagnostics
from ..native_solver import NativeSolver, NativeSolverConfig, NativeSolverError
from ..smt_bridge import BridgeConfig, SmtBridge, SmtError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

DEFAULT_CONFIG_FILE = Path("symflow_config.ini")

# (section, option) -> RunConfig field
_INI_FIELDS = {
    ("solver", "command"): "solver_cmd",
    ("solver", "timeout"): "timeout",
    ("solver", "cache"): "cache",
    ("solver", "magic_seed"): "magic_seed",
    ("solver", "width"): "width",
    ("native", "switch_size"): "switch_size",
    ("native", "max_size"): "native_max_size",
    ("native", "escalate"): "escalate",
    ("symexec", "bound"): "bound",
    ("engine", "jobs"): "jobs",
    ("logging", "level"): "log_level",
}

_ENV_FIELDS = {
    "SYMFLOW_SOLVER_CMD": "solver_cmd",
    "SYMFLOW_SMT_CACHE": "cache",
    "SYMFLOW_LOG_LEVEL": "log_level",
}


class ConfigurationManager:
    """Run defaults: config file, then environment, then flags."""

    def __init__(self, config_file: Optional[Path] = None):
        self.config_file = Path(config_file) if config_file else DEFAULT_CONFIG_FILE
        self.config: Dict[str, Any] = {}
        self._load_config()
        self._load_environment()

    def _load_config(self):
        """Load defaults from the INI file, when there is one"""
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        if not parser.read(self.config_file, encoding="utf-8"):
            logger.debug(f"No config file at {self.config_file}; using built-in defaults")
            return
        for (section, option), name in _INI_FIELDS.items():
            value = parser.get(section, option, fallback="").strip()
            if value:
                self.config[name] = value

    def _load_environment(self):
        load_dotenv()
        for variable, name in _ENV_FIELDS.items():
            value = os.getenv(variable)
            if value:
                self.config[name] = value

    def get(self, key: str, default=None):
        return self.config.get(key, default)

    def build(self, args: argparse.Namespace) -> RunConfig:
        """
        Merge flags over the loaded defaults.

        Raises:
            ValidationError: a value is out of range or a custom run has no program
        """
        values = dict(self.config)
        for name in ("program", "analysis", "facts", "out", "solver_cmd", "switch_size", "bound",
                     "native_max_size", "jobs", "cache", "magic_seed", "timeout", "log_level"):
            flag = getattr(args, name, None)
            if flag is not None:
                values[name] = flag
        if args.escalate:
            values["escalate"] = True
        if values.get("analysis") is None:
            values["analysis"] = AnalysisPreset.CUSTOM.value
        return RunConfig(**values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symflow",
        description="Evaluate a Datalog analysis with native and SMT solving of symbolic expressions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="INI file with run defaults (default: ./symflow_config.ini)")
    parser.add_argument("--program", type=Path, help="Datalog program to run (custom analysis)")
    parser.add_argument("--analysis", choices=[p.value for p in AnalysisPreset],
                        help="bundled analysis to run")
    parser.add_argument("--facts", type=Path, required=True, help="directory of <Relation>.facts files")
    parser.add_argument("--out", type=Path, required=True, help="directory for <Relation>.csv outputs")
    parser.add_argument("--solver-cmd", dest="solver_cmd", help="SMT-LIB2 solver command line")
    parser.add_argument("--switch-size", dest="switch_size", type=int,
                        help="largest query (in nodes) tried by the native solver; 0 means SMT only")
    parser.add_argument("--bound", type=int, help="path condition length bound for symexec")
    parser.add_argument("--native-max-size", dest="native_max_size", type=int,
                        help="node bound of the native solver's universe")
    parser.add_argument("--jobs", type=int, help="engine workers and solver processes")
    parser.add_argument("--cache", type=Path, help="persistent SMT query cache file")
    parser.add_argument("--magic-seed", dest="magic_seed", type=int, help="seed of the magic constant pool")
    parser.add_argument("--timeout", type=float, help="per-query solver timeout in seconds")
    parser.add_argument("--escalate", action="store_true", help="send native unknowns to the SMT solver")
    parser.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging level")
    return parser


def _build_analysis(config: RunConfig, bridge: SmtBridge, dispatch: SolverDispatch) -> Analysis:
    engine_config = EngineConfig(workers=config.jobs)
    if config.analysis is AnalysisPreset.POINTS_TO:
        return PointsToAnalysis(engine_config)
    if config.analysis is AnalysisPreset.SYMEXEC:
        return SymexecAnalysis(dispatch, config.bound, engine_config)
    return CustomAnalysis(config.program, bridge, dispatch, engine_config)


def _write_diagnostics(path: Path, diagnostics: RunDiagnostics):
    lines = [f"{key}\t{value}" for key, value in diagnostics.rows()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _solver_failure(error: BaseException) -> bool:
    while error is not None:
        if isinstance(error, SmtError):
            return True
        error = error.__cause__
    return False


def run(config: RunConfig) -> int:
    """
    Parse, evaluate and dump one analysis.

    Returns:
        0 on success; 1 analysis error; 2 usage or I/O error; 3 solver failure
    """
    if not config.facts.is_dir():
        logger.error(f"Fact directory {config.facts} does not exist")
        return EXIT_USAGE
    if not config.program.is_file():
        logger.error(f"Program {config.program} does not exist")
        return EXIT_USAGE

    bridge = SmtBridge(BridgeConfig(
        solver_cmd=config.solver_cmd, timeout=config.timeout, pool_size=config.jobs,
        cache_path=config.cache, magic_seed=config.magic_seed, width=config.width,
    ))
    native = NativeSolver(NativeSolverConfig(max_size=config.native_max_size, width=config.width))
    dispatch = SolverDispatch(native, bridge, DispatchConfig(config.switch_size, config.escalate))

    try:
        analysis = _build_analysis(config, bridge, dispatch)
        result = analysis.run(config.facts)
        written = analysis.engine.dump_relations(result.db, config.out, result.program)
        diagnostics = RunDiagnostics(
            analysis=config.analysis.value,
            seconds=result.seconds,
            engine=analysis.engine.get_stats(),
            solver=dispatch.get_stats(),
            queries=dispatch.all_diagnostics(),
        )
        _write_diagnostics(config.out / "diagnostics.csv", diagnostics)
        logger.info(f"Wrote {len(written)} relation(s) and diagnostics to {config.out}")
        return EXIT_OK
    except FactIOError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_USAGE
    except (DatalogError, ExprError, NativeSolverError, SmtError) as e:
        if _solver_failure(e):
            logger.error(f"Solver failure: {e}")
            return EXIT_SOLVER
        logger.error(f"Analysis error: {e}")
        return EXIT_ANALYSIS
    finally:
        bridge.close()


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function for the symflow command"""
    parser = build_parser()
    args = parser.parse_args(argv)
    manager = ConfigurationManager(args.config)
    try:
        config = manager.build(args)
    except ValidationError as e:
        messages: List[str] = [f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
                               for err in e.errors()]
        print("symflow: invalid configuration: " + "; ".join(messages), file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
