"""
Analyses module for Symflow Project
This module provides the bundled points-to and symbolic execution analyses and the native/SMT dispatch.
"""

from .analysis import Analysis, AnalysisResult, FactSource
from .custom import CustomAnalysis
from .dispatch import OVER_BOUND, DispatchConfig, SolverDispatch
from .points_to import POINTS_TO_OUTPUTS, POINTS_TO_PROGRAM, PointsToAnalysis, run_points_to
from .symexec import DEFAULT_BOUND, SYMEXEC_OUTPUTS, SYMEXEC_PROGRAM, SymexecAnalysis, run_symexec

__all__ = [
    'Analysis',
    'AnalysisResult',
    'FactSource',
    'CustomAnalysis',
    'OVER_BOUND',
    'DispatchConfig',
    'SolverDispatch',
    'POINTS_TO_OUTPUTS',
    'POINTS_TO_PROGRAM',
    'PointsToAnalysis',
    'run_points_to',
    'DEFAULT_BOUND',
    'SYMEXEC_OUTPUTS',
    'SYMEXEC_PROGRAM',
    'SymexecAnalysis',
    'run_symexec',
]
