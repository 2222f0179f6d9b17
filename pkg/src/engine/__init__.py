"""
Engine module for Symflow Project
This module provides Datalog parsing, stratification and semi-naive evaluation with records and functors.
"""

from .datalog_engine import DatalogEngine, EngineConfig
from .errors import (
    ArityError,
    DatalogError,
    DatalogSyntaxError,
    DuplicateFunctor,
    FactIOError,
    FactTypeError,
    FunctorError,
    MalformedList,
    ResourceLimit,
    SafetyError,
    SourceLocation,
    StratificationError,
    UnknownOrdinal,
    UnknownPredicate,
    UnknownRecordRef,
)
from .functors import EvaluationContext, Functor
from .parser import parse_program
from .program import Program, Rule
from .relation import FactDB, Relation, decode_value, encode_value
from .stratifier import Stratum, StratumPlan
from .values import NIL, Nil, RecordRef, Symbol, Value

__all__ = [
    'DatalogEngine',
    'EngineConfig',
    'ArityError',
    'DatalogError',
    'DatalogSyntaxError',
    'DuplicateFunctor',
    'FactIOError',
    'FactTypeError',
    'FunctorError',
    'MalformedList',
    'ResourceLimit',
    'SafetyError',
    'SourceLocation',
    'StratificationError',
    'UnknownOrdinal',
    'UnknownPredicate',
    'UnknownRecordRef',
    'EvaluationContext',
    'Functor',
    'parse_program',
    'Program',
    'Rule',
    'FactDB',
    'Relation',
    'decode_value',
    'encode_value',
    'Stratum',
    'StratumPlan',
    'NIL',
    'Nil',
    'RecordRef',
    'Symbol',
    'Value',
]
