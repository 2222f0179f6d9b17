"""
Functors module for Symflow Project
This module provides the registry of host functions callable from rules as `@name(...)`.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

from .errors import DatalogError, DuplicateFunctor, FunctorError
from .relation import FactDB, Row
from .values import RecordTable, SymbolTable, Value

logger = logging.getLogger(__name__)


@dataclass
class Functor:
    """
    A registered host function.

    Attributes:
        name: name used after `@` in rules
        arity: number of arguments
        func: the callable; receives an EvaluationContext first when stateful
        stateful: whether func needs the interning tables or relation contents
        monotonic: False for functors whose result depends on relation contents
        reads: relations a non-monotonic functor consults
    """
    name: str
    arity: int
    func: Callable[..., Value]
    stateful: bool = False
    monotonic: bool = True
    reads: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError("functor arity must be non-negative")
        if self.reads and self.monotonic:
            raise ValueError(f"functor {self.name} reads relations and must be declared non-monotonic")
        if self.reads and not self.stateful:
            raise ValueError(f"functor {self.name} reads relations and must be stateful")


class EvaluationContext:
    """What a stateful functor sees: interning tables and read-only relation contents."""

    def __init__(self, symbols: SymbolTable, records: RecordTable, db: Optional[FactDB] = None):
        self.symbols = symbols
        self.records = records
        self.db = db

    def intern(self, text: str) -> Value:
        return self.symbols.intern(text)

    def resolve(self, value: Value) -> str:
        return self.symbols.resolve(value)

    def pack(self, fields: Iterable[Value]) -> Value:
        return self.records.pack(list(fields))

    def unpack(self, value: Value) -> Tuple[Value, ...]:
        return self.records.unpack(value)

    def relation(self, name: str) -> FrozenSet[Row]:
        if self.db is None:
            raise FunctorError(f"relation {name} is not readable outside evaluation")
        return self.db.rows(name)


class FunctorRegistry:
    """Name to Functor map with thread-safe registration."""

    def __init__(self):
        self._functors: Dict[str, Functor] = {}
        self.lock = threading.RLock()

    def register(self, functor: Functor):
        with self.lock:
            if functor.name in self._functors:
                raise DuplicateFunctor(f"functor @{functor.name} is already registered")
            self._functors[functor.name] = functor
        logger.debug(f"Registered functor @{functor.name}/{functor.arity}")

    def get(self, name: str) -> Functor:
        functor = self._functors.get(name)
        if functor is None:
            raise FunctorError(f"unknown functor @{name}")
        return functor

    def __contains__(self, name: str) -> bool:
        return name in self._functors

    def names(self) -> List[str]:
        return sorted(self._functors)

    def call(self, name: str, args: Tuple[Value, ...], context: EvaluationContext) -> Value:
        functor = self.get(name)
        if len(args) != functor.arity:
            raise FunctorError(f"@{name} expects {functor.arity} arguments, got {len(args)}")
        try:
            if functor.stateful:
                return functor.func(context, *args)
            return functor.func(*args)
        except DatalogError:
            raise
        except Exception as e:
            raise FunctorError(f"@{name} failed: {e}") from e


def register_builtins(registry: FunctorRegistry):
    """Functors every engine instance provides."""

    def list_length(context: EvaluationContext, value: Value) -> Value:
        return context.records.list_length(value)

    def cat(context: EvaluationContext, left: Value, right: Value) -> Value:
        return context.intern(context.resolve(left) + context.resolve(right))

    registry.register(Functor("list_length", 1, list_length, stateful=True))
    registry.register(Functor("cat", 2, cat, stateful=True))
