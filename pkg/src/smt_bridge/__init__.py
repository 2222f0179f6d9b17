"""
SMT Bridge module for Symflow Project
This module provides SMT-LIB2 query printing, a cached solver process pool and the smt functors.
"""

from .bridge import DEFAULT_SOLVER_CMD, BridgeConfig, SmtBridge
from .errors import CyclicLets, IndexOutOfRange, NoTemplate, SmtError, SolverCrash, SolverNotConfigured
from .forall_star import ForAllStarReport, check_forall_star_soundness
from .magic import ANCHOR_CONSTANT, MagicPool
from .printer import SmtPrinter, SmtQuery, bv_literal, inline_operator, order_lets, smt_symbol
from .query_cache import QueryCache, SmtResult, SmtStatus, query_key
from .solver_process import SolverPool, SolverProcess

__all__ = [
    'DEFAULT_SOLVER_CMD',
    'BridgeConfig',
    'SmtBridge',
    'CyclicLets',
    'IndexOutOfRange',
    'NoTemplate',
    'SmtError',
    'SolverCrash',
    'SolverNotConfigured',
    'ForAllStarReport',
    'check_forall_star_soundness',
    'ANCHOR_CONSTANT',
    'MagicPool',
    'SmtPrinter',
    'SmtQuery',
    'bv_literal',
    'inline_operator',
    'order_lets',
    'smt_symbol',
    'QueryCache',
    'SmtResult',
    'SmtStatus',
    'query_key',
    'SolverPool',
    'SolverProcess',
]
