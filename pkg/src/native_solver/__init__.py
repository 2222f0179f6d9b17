"""
Native Solver module for Symflow Project
This module provides the bounded bottom-up algebraic solver written in Datalog, and its Python facade.
"""

from .errors import NativeSolverError, NoStrategy, NotInUniverse, SeedTooLarge
from .functors import check_solution, register_native_functors
from .native_solver import (
    DEFAULT_FEED,
    SOLVER_PROGRAM,
    ConditionResult,
    NativeSolver,
    NativeSolverConfig,
    RoundOutput,
    Universe,
    operator_facts,
)

__all__ = [
    'NativeSolverError',
    'NoStrategy',
    'NotInUniverse',
    'SeedTooLarge',
    'check_solution',
    'register_native_functors',
    'DEFAULT_FEED',
    'SOLVER_PROGRAM',
    'ConditionResult',
    'NativeSolver',
    'NativeSolverConfig',
    'RoundOutput',
    'Universe',
    'operator_facts',
]
