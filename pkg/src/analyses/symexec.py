"""
Symexec module for Symflow Project
This module runs the bundled symbolic execution analysis over SSA basic blocks, with
branch feasibility decided through a SolverDispatch.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..engine.datalog_engine import DatalogEngine, EngineConfig
from ..engine.relation import FactDB
from ..expr.codec import register_expr_functors
from ..expr.expression import FRESH_PREFIX
from .analysis import Analysis, AnalysisResult, FactSource
from .dispatch import SolverDispatch

logger = logging.getLogger(__name__)

SYMEXEC_PROGRAM = Path(__file__).parent / "symexec.dl"
SYMEXEC_OUTPUTS = ("Reachable", "Lookup", "BlockSetsVar", "Models", "SolverDiagnostic")
DEFAULT_BOUND = 8


class SymexecAnalysis(Analysis):
    """
    Symbolic execution with path conditions bounded by `bound` conditions.

    Fresh argument values use the `$fresh_` prefix, which input facts may not use.
    """

    name = "symexec"
    reserved_prefixes = (FRESH_PREFIX,)

    def __init__(self, dispatch: SolverDispatch, bound: int = DEFAULT_BOUND,
                 engine_config: Optional[EngineConfig] = None):
        if bound < 1:
            raise ValueError("path condition bound must be at least 1")
        self.dispatch = dispatch
        self.bound = bound
        super().__init__(engine_config)

    @property
    def program_path(self) -> Path:
        return SYMEXEC_PROGRAM

    def register_functors(self, engine: DatalogEngine):
        codec = register_expr_functors(engine)
        self.dispatch.register_functors(engine, codec)

    def extra_facts(self) -> Dict[str, List[Tuple[Any, ...]]]:
        return {"Bound": [(self.bound,)]}

    def load(self, facts: FactSource) -> FactDB:
        db = super().load(facts)
        bridge = self.dispatch.bridge
        if bridge is not None:
            constants = [int(row[2][0], 16) for row in db.to_python(["Assign"])["Assign"]
                         if row[2][1] is None and row[2][0].startswith("0x")]
            bridge.magic.check_disjoint(constants)
        return db


def run_symexec(facts: FactSource, dispatch: SolverDispatch, bound: int = DEFAULT_BOUND,
                engine_config: Optional[EngineConfig] = None, naive: bool = False) -> AnalysisResult:
    """
    Returns:
        AnalysisResult over Reachable, Lookup, BlockSetsVar, Models and SolverDiagnostic
    """
    return SymexecAnalysis(dispatch, bound, engine_config).run(facts, naive=naive)
