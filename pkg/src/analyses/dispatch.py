"""
Dispatch module for Symflow Project
This module routes path-condition queries to the native solver or the SMT bridge by
expression size, and exposes the routing to analyses as the @solve functors.
"""

import logging
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..engine.values import Value
from ..expr.codec import ExprCodec
from ..expr.concrete import eval_concrete
from ..expr.errors import ExprError
from ..expr.expression import Expr, canonical_constant, flatten, serialize, variables
from ..native_solver.errors import NativeSolverError
from ..native_solver.native_solver import NativeSolver
from ..smt_bridge.bridge import SmtBridge
from ..smt_bridge.errors import SolverNotConfigured
from ..smt_bridge.query_cache import SmtResult, SmtStatus, query_key

if TYPE_CHECKING:
    from ..engine.datalog_engine import DatalogEngine

logger = logging.getLogger(__name__)

OVER_BOUND = "over-bound"


@dataclass
class DispatchConfig:
    """
    switch_size: queries with at most this many nodes try the native solver first;
        0 sends everything to SMT
    escalate: hand native `unknown` verdicts to the SMT bridge
    """
    switch_size: int = 10
    escalate: bool = False

    def __post_init__(self):
        if self.switch_size < 0:
            raise ValueError("switch size must be non-negative")


class SolverDispatch:
    """
    Native-or-SMT routing for conjunctions of conditions.

    The native path looks at each condition on its own: a condition that
    normalizes to a constant other than 1 makes the query unsat, and the
    per-condition solutions are assembled into a model that must make the whole
    conjunction evaluate to 1. Anything else is `unknown`.
    """

    def __init__(self, native: Optional[NativeSolver] = None, bridge: Optional[SmtBridge] = None,
                 config: Optional[DispatchConfig] = None, bound_vars: Iterable[str] = ()):
        self.native = native
        self.bridge = bridge
        self.config = config or DispatchConfig()
        self.bound_vars = frozenset(bound_vars)
        self.diagnostics: List[Tuple[str, str, str]] = []
        self._native_answers: Dict[Expr, SmtResult] = {}
        self.lock = threading.RLock()
        self.stats: Dict[str, int] = {
            "queries": 0,
            "native_queries": 0,
            "smt_queries": 0,
            "native_sat": 0,
            "native_unsat": 0,
            "native_unknown": 0,
            "over_bound": 0,
            "escalated": 0,
        }

    def _count(self, key: str):
        with self.lock:
            self.stats[key] += 1

    def dispatch_query(self, cond: Expr, path_cond: Sequence[Expr] = ()) -> SmtResult:
        """
        Decide `cond AND pathCond`.

        Args:
            cond: the new branch condition
            path_cond: conditions already on the path, most recent first

        Returns:
            An SmtResult; native answers carry a model over every free variable

        Raises:
            SolverNotConfigured: the query needs the SMT bridge and there is none
        """
        conditions = [cond, *path_cond]
        query = flatten("AND", conditions)
        self._count("queries")
        if query.size <= self.config.switch_size and self.native is not None \
                and not (variables(query) & self.bound_vars):
            result = self._native_answers.get(query)
            if result is None:
                result = self._native(query, conditions)
                with self.lock:
                    self._native_answers[query] = result
            if result.status is not SmtStatus.UNKNOWN or not self.config.escalate:
                return result
            self._count("escalated")
            logger.debug(f"Escalating native unknown to SMT for {query_key(serialize(query))[:12]}")
        return self._smt(query)

    def _smt(self, query: Expr) -> SmtResult:
        if self.bridge is None:
            raise SolverNotConfigured("query exceeds the native switch size and no SMT bridge is configured")
        self._count("smt_queries")
        return self.bridge.solve(query, sorted(variables(query) & self.bound_vars))

    def _native(self, query: Expr, conditions: List[Expr]) -> SmtResult:
        self._count("native_queries")
        max_size = self.native.config.max_size
        if any(c.size > max_size for c in conditions):
            return self._native_unknown(query, OVER_BOUND)

        model: Dict[str, Expr] = {}
        for condition in conditions:
            try:
                known = self.native.solve_condition(condition)
            except (NativeSolverError, ExprError) as e:
                logger.warning(f"Native solver failed on {condition}: {e}")
                return self._native_unknown(query, f"native error: {e}")
            if known.constant is not None:
                if known.constant != 1:
                    self._count("native_unsat")
                    return SmtResult(SmtStatus.UNSAT)
                continue
            for var in sorted(known.solutions):
                if var not in model:
                    constants = [v for v in known.solutions[var] if v.is_constant]
                    if constants:
                        model[var] = constants[0]

        width = self.native.config.width
        env = {var: 0 for var in variables(query)}
        env.update({var: value.value for var, value in model.items()})
        try:
            holds = eval_concrete(query, env, width, self.native.table) == 1
        except ExprError as e:
            return self._native_unknown(query, f"native error: {e}")
        if not holds:
            return self._native_unknown(query)
        self._count("native_sat")
        return SmtResult(SmtStatus.SAT, {var: canonical_constant(value, width) for var, value in env.items()})

    def _native_unknown(self, query: Expr, diagnostic: Optional[str] = None) -> SmtResult:
        self._count("native_unknown")
        if diagnostic == OVER_BOUND:
            self._count("over_bound")
        if diagnostic:
            with self.lock:
                self.diagnostics.append((query_key(serialize(query)), SmtStatus.UNKNOWN.value, diagnostic))
        return SmtResult(SmtStatus.UNKNOWN, diagnostic=diagnostic)

    # engine functors

    def register_functors(self, engine: "DatalogEngine", codec: Optional[ExprCodec] = None) -> ExprCodec:
        """Register @solve(cond, pathCond) -> [status] and @solve_with_model -> [status, model]."""
        codec = codec or ExprCodec.for_engine(engine)

        def decide(cond: Value, path_cond: Value) -> SmtResult:
            return self.dispatch_query(codec.decode(cond), codec.decode_list(path_cond))

        def solve_functor(cond: Value, path_cond: Value) -> Value:
            return engine.pack_record([engine.intern_symbol(decide(cond, path_cond).status.value)])

        def solve_with_model_functor(cond: Value, path_cond: Value) -> Value:
            result = decide(cond, path_cond)
            return codec.encode_result(result.status.value, result.model)

        engine.register_functor("solve", 2, solve_functor)
        engine.register_functor("solve_with_model", 2, solve_with_model_functor)
        return codec

    def all_diagnostics(self) -> List[Tuple[str, str, str]]:
        with self.lock:
            rows: Set[Tuple[str, str, str]] = set(self.diagnostics)
        if self.bridge is not None:
            rows |= set(self.bridge.diagnostics)
        return sorted(rows)

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            stats: Dict[str, Any] = dict(self.stats)
        if self.native is not None:
            stats["native"] = self.native.get_stats()
        if self.bridge is not None:
            stats["smt"] = self.bridge.get_stats()
        return stats
