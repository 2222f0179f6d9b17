"""
SMT Bridge module for Symflow Project
This module connects Datalog rules to an external SMT-LIB2 solver: query printing,
cached solving, validity checks and the functors that expose them to programs.
"""

import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..engine.values import RecordRef, Symbol, Value
from ..expr.codec import ExprCodec
from ..expr.expression import Expr
from ..expr.operators import OperatorTable
from .errors import SolverNotConfigured
from .magic import MagicPool
from .printer import SmtPrinter, SmtQuery, declared_free_vars
from .query_cache import QueryCache, SmtResult, SmtStatus, query_key
from .solver_process import SolverPool

if TYPE_CHECKING:
    from ..engine.datalog_engine import DatalogEngine

logger = logging.getLogger(__name__)

DEFAULT_SOLVER_CMD = "z3 -in -smt2"


@dataclass
class BridgeConfig:
    """SMT bridge knobs"""
    solver_cmd: Optional[str] = DEFAULT_SOLVER_CMD
    timeout: float = 60.0
    pool_size: int = 1
    cache_path: Optional[Path] = None
    magic_seed: int = 0
    width: int = 256
    logic: str = "QF_BV"
    use_define_fun: bool = False

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("solver timeout must be positive")
        if self.pool_size < 1:
            raise ValueError("solver pool size must be at least 1")
        if self.width < 1:
            raise ValueError("bit-width must be positive")


class SmtBridge:
    """
    Printer, cache and solver pool behind the smt functors.

    Every answer goes through the cache first, so repeated queries are answered
    identically without touching the solver.
    """

    def __init__(self, config: Optional[BridgeConfig] = None, table: Optional[OperatorTable] = None):
        self.config = config or BridgeConfig()
        self.table = table or OperatorTable.default()
        self.magic = MagicPool(seed=self.config.magic_seed)
        self.printer = SmtPrinter(self.table, self.config.width, self.magic,
                                  self.config.logic, self.config.use_define_fun)
        self.cache = QueryCache(self.config.cache_path)
        self._pool: Optional[SolverPool] = None
        self._queries: Dict[str, SmtQuery] = {}
        self.diagnostics: List[Tuple[str, str, str]] = []
        self.lock = threading.RLock()
        self.stats: Dict[str, int] = {
            "queries": 0,
            "cache_hits": 0,
            "solver_invocations": 0,
            "sat": 0,
            "unsat": 0,
            "unknown": 0,
            "timeout": 0,
        }
        logger.info(f"SMT bridge ready (solver: {self.config.solver_cmd or 'none'}, "
                    f"cache: {self.config.cache_path or 'memory'})")

    @property
    def pool(self) -> SolverPool:
        with self.lock:
            if self._pool is None:
                if not self.config.solver_cmd:
                    raise SolverNotConfigured("no solver command configured")
                self._pool = SolverPool(self.config.solver_cmd, self.config.pool_size,
                                        self.config.timeout, self.config.logic, self.config.width)
            return self._pool

    # queries

    def print_to_smt(self, constraint: Expr, bound_vars: Iterable[str] = (),
                     lets: Sequence[Tuple[str, Expr]] = ()) -> SmtQuery:
        query = self.printer.print_to_smt(constraint, bound_vars, lets)
        with self.lock:
            self._queries.setdefault(query.text, query)
        return query

    def smt_response(self, query: Union[SmtQuery, str]) -> SmtResult:
        """
        Answer a query, from the cache when it was asked before.

        Args:
            query: an SmtQuery, or query text produced by print_to_smt

        Returns:
            The SmtResult; crashes and timeouts are statuses, not exceptions

        Raises:
            SolverNotConfigured: a cache miss with no usable solver command
        """
        text = query.text if isinstance(query, SmtQuery) else query
        with self.lock:
            self.stats["queries"] += 1
        cached = self.cache.get(text)
        if cached is not None:
            with self.lock:
                self.stats["cache_hits"] += 1
            return cached

        free_vars = self._free_vars(query)
        with self.lock:
            self.stats["solver_invocations"] += 1
        result = self.pool.check(text, free_vars)
        with self.lock:
            self.stats[result.status.value] += 1
            if result.diagnostic:
                self.diagnostics.append((query_key(text), result.status.value, result.diagnostic))
        logger.debug(f"Solver answered {result.status.value} for query {query_key(text)[:12]}")

        if not result.is_definite:
            return result
        return self.cache.put(text, result)

    def _free_vars(self, query: Union[SmtQuery, str]) -> Tuple[str, ...]:
        if isinstance(query, SmtQuery):
            return query.free_vars
        known = self._queries.get(query)
        return known.free_vars if known is not None else declared_free_vars(query)

    def solve(self, constraint: Expr, bound_vars: Iterable[str] = (),
              lets: Sequence[Tuple[str, Expr]] = ()) -> SmtResult:
        return self.smt_response(self.print_to_smt(constraint, bound_vars, lets))

    def smt_valid(self, e: Expr, bound_vars: Iterable[str] = ()) -> bool:
        """e = 1 for every assignment: its negation is unsat."""
        negated = Expr("ISZERO", Expr("EQ", e, Expr("0x1")))
        return self.solve(negated, bound_vars).status is SmtStatus.UNSAT

    def smt_equivalent(self, a: Expr, b: Expr, bound_vars: Iterable[str] = ()) -> bool:
        return self.smt_valid(Expr("EQ", a, b), bound_vars)

    # engine functors

    def register_functors(self, engine: "DatalogEngine", codec: Optional[ExprCodec] = None) -> ExprCodec:
        """
        Register @print_to_smt, @smt_response, @smt_response_with_model,
        @smt_valid and @smt_equivalent on an engine.
        """
        codec = codec or ExprCodec.for_engine(engine)

        def variable_name(value: Value) -> str:
            if isinstance(value, Symbol):
                return engine.resolve_symbol(value)
            if isinstance(value, RecordRef):
                return codec.decode(value).base
            raise ValueError(f"variable expected, found {value!r}")

        def print_functor(constraint: Value, bound: Value, lets: Value) -> Value:
            bound_vars = [variable_name(v) for v in engine.records.unpack_list(bound)]
            bindings = []
            for cell in engine.records.unpack_list(lets):
                var, expr = engine.unpack_record(cell)
                bindings.append((variable_name(var), codec.decode(expr)))
            query = self.print_to_smt(codec.decode(constraint), bound_vars, bindings)
            return engine.intern_symbol(query.text)

        def response_functor(text: Value) -> Value:
            result = self.smt_response(engine.resolve_symbol(text))
            return engine.pack_record([engine.intern_symbol(result.status.value)])

        def response_with_model_functor(text: Value) -> Value:
            result = self.smt_response(engine.resolve_symbol(text))
            return codec.encode_result(result.status.value, result.model)

        def valid_functor(e: Value) -> Value:
            return int(self.smt_valid(codec.decode(e)))

        def equivalent_functor(a: Value, b: Value) -> Value:
            return int(self.smt_equivalent(codec.decode(a), codec.decode(b)))

        engine.register_functor("print_to_smt", 3, print_functor)
        engine.register_functor("smt_response", 1, response_functor)
        engine.register_functor("smt_response_with_model", 1, response_with_model_functor)
        engine.register_functor("smt_valid", 1, valid_functor)
        engine.register_functor("smt_equivalent", 2, equivalent_functor)
        return codec

    # lifecycle

    def close(self):
        with self.lock:
            if self._pool is not None:
                self._pool.close()
                self._pool = None

    def __enter__(self) -> "SmtBridge":
        return self

    def __exit__(self, *exc):
        self.close()

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            stats = dict(self.stats)
            pool = self._pool
        stats["cache"] = self.cache.get_stats()
        if pool is not None:
            stats["solver"] = pool.get_stats()
        stats["diagnostics"] = len(self.diagnostics)
        return stats
