"""
Points-to module for Symflow Project
This module runs the bundled Andersen-style points-to analysis.
"""

import logging
from pathlib import Path
from typing import Optional

from ..engine.datalog_engine import DatalogEngine, EngineConfig
from .analysis import Analysis, AnalysisResult, FactSource

logger = logging.getLogger(__name__)

POINTS_TO_PROGRAM = Path(__file__).parent / "pointsto.dl"
POINTS_TO_OUTPUTS = ("VarPointsTo", "FldPointsTo", "CallGraph", "Reachable", "InterProcAssign")


class PointsToAnalysis(Analysis):
    """Field-sensitive, context-insensitive points-to with on-the-fly call graph."""

    name = "points-to"

    @property
    def program_path(self) -> Path:
        return POINTS_TO_PROGRAM

    def register_functors(self, engine: DatalogEngine):
        pass


def run_points_to(facts: FactSource, engine_config: Optional[EngineConfig] = None,
                  naive: bool = False) -> AnalysisResult:
    """
    Args:
        facts: fact directory or relation -> rows; Reachable rows seed the analysis

    Returns:
        AnalysisResult over VarPointsTo, FldPointsTo, CallGraph, Reachable, InterProcAssign
    """
    return PointsToAnalysis(engine_config).run(facts, naive=naive)
