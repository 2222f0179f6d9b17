"""
Custom analysis module for Symflow Project
This module runs a user-supplied Datalog program with every expression, SMT and
dispatch functor available.
"""

import logging
from pathlib import Path
from typing import Optional

from ..engine.datalog_engine import DatalogEngine, EngineConfig
from ..expr.codec import register_expr_functors
from ..smt_bridge.bridge import SmtBridge
from .analysis import Analysis
from .dispatch import SolverDispatch

logger = logging.getLogger(__name__)


class CustomAnalysis(Analysis):
    """A program from disk; registers @fresh/@flatten/@tree_size, the smt functors and @solve."""

    name = "custom"

    def __init__(self, path: Path, bridge: Optional[SmtBridge] = None,
                 dispatch: Optional[SolverDispatch] = None,
                 engine_config: Optional[EngineConfig] = None):
        self.path = Path(path)
        self.bridge = bridge
        self.dispatch = dispatch
        super().__init__(engine_config)

    @property
    def program_path(self) -> Path:
        return self.path

    def register_functors(self, engine: DatalogEngine):
        codec = register_expr_functors(engine)
        if self.bridge is not None:
            self.bridge.register_functors(engine, codec)
        if self.dispatch is not None:
            self.dispatch.register_functors(engine, codec)
