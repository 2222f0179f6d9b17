"""
Datalog Engine module for Symflow Project
This module provides the DatalogEngine facade: interning, functors, parsing, evaluation and fact I/O.
"""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

from .evaluator import Evaluator
from .fact_io import dump_relations, load_facts
from .functors import Functor, FunctorRegistry, register_builtins
from .parser import parse_program
from .program import Program
from .relation import FactDB
from .stratifier import StratumPlan, stratify
from .values import RecordTable, SymbolTable, Value

logger = logging.getLogger(__name__)


@dataclass
class EngineConfig:
    """Engine knobs"""
    workers: int = 1
    max_tuples_per_relation: int = 50_000_000
    max_iterations: Optional[int] = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.max_tuples_per_relation < 1:
            raise ValueError("max_tuples_per_relation must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


class DatalogEngine:
    """
    One engine instance: its own symbol and record tables plus a functor registry.

    Values produced by one instance are only meaningful to that instance. The
    mutation entry points (register_functor, evaluate) are not re-entrant.
    """

    def __init__(self, config: Optional[EngineConfig] = None):
        self.config = config or EngineConfig()
        self.symbols = SymbolTable()
        self.records = RecordTable()
        self.functors = FunctorRegistry()
        register_builtins(self.functors)
        self.stats: Dict[str, Any] = {
            "evaluations": 0,
            "total_seconds": 0.0,
            "strata": [],
        }
        logger.debug(f"Datalog engine initialized with {self.config.workers} worker(s)")

    # interning

    def intern_symbol(self, text: str) -> Value:
        return self.symbols.intern(text)

    def resolve_symbol(self, symbol: Value) -> str:
        return self.symbols.resolve(symbol)

    def pack_record(self, fields: Sequence[Value]) -> Value:
        return self.records.pack(fields)

    def unpack_record(self, ref: Value) -> List[Value]:
        return list(self.records.unpack(ref))

    def list_length(self, value: Value) -> int:
        return self.records.list_length(value)

    # functors

    def register_functor(self, name: str, arity: int, func: Callable[..., Value], *,
                         stateful: bool = False, monotonic: bool = True,
                         reads: Iterable[str] = ()):
        """
        Make `func` callable from rules as `@name(...)`.

        Args:
            name: functor name, unused so far
            arity: number of arguments
            func: deterministic function over Values
            stateful: pass an EvaluationContext as first argument
            monotonic: False when the result depends on relation contents
            reads: relations consulted by a non-monotonic functor
        """
        self.functors.register(Functor(name, arity, func, stateful, monotonic, tuple(reads)))

    # programs

    def parse_program(self, source_text: str) -> Program:
        return parse_program(source_text)

    def stratify(self, program: Program) -> StratumPlan:
        return stratify(program, self.functors)

    def new_factdb(self, program: Optional[Program] = None) -> FactDB:
        arities = {name: decl.arity for name, decl in program.relations.items()} if program else None
        return FactDB(self.symbols, self.records, arities)

    def evaluate(self, program: Program, edb: Optional[FactDB] = None) -> FactDB:
        """
        Semi-naive least fixpoint of program over edb.

        Args:
            program: parsed program
            edb: input facts; not modified

        Returns:
            A new FactDB holding input and derived relations
        """
        return self._run(program, edb, naive=False)

    def naive_evaluate(self, program: Program, edb: Optional[FactDB] = None) -> FactDB:
        """Least fixpoint by naive re-derivation; the test oracle for evaluate."""
        return self._run(program, edb, naive=True)

    def _run(self, program: Program, edb: Optional[FactDB], naive: bool) -> FactDB:
        plan = self.stratify(program)
        db = edb.copy() if edb is not None else self.new_factdb(program)
        evaluator = Evaluator(
            program, plan, self.symbols, self.records, self.functors,
            workers=1 if naive else self.config.workers,
            max_tuples=self.config.max_tuples_per_relation,
            max_iterations=self.config.max_iterations,
        )
        started = time.perf_counter()
        if naive:
            evaluator.evaluate_naive(db)
        else:
            evaluator.evaluate_semi_naive(db)
        elapsed = time.perf_counter() - started

        self.stats["evaluations"] += 1
        self.stats["total_seconds"] += elapsed
        self.stats["strata"] = [
            {"stratum": s.stratum, "relations": list(s.relations), "iterations": s.iterations,
             "seconds": s.seconds, "rows": s.rows}
            for s in evaluator.stats
        ]
        logger.info(f"{'Naive' if naive else 'Semi-naive'} evaluation finished: {len(plan)} strata, "
                    f"{db.total_rows()} tuples in {elapsed:.3f}s")
        return db

    # fact files

    def load_facts(self, directory: Path, program: Program,
                   reserved_prefixes: Sequence[str] = ()) -> FactDB:
        return load_facts(Path(directory), program, self.new_factdb(program), reserved_prefixes)

    def dump_relations(self, db: FactDB, directory: Path, program: Program,
                       relations: Optional[Iterable[str]] = None) -> List[Path]:
        return dump_relations(db, Path(directory), program, relations)

    def get_stats(self) -> Dict[str, Any]:
        stats = dict(self.stats)
        stats["symbols"] = len(self.symbols)
        stats["records"] = len(self.records)
        return stats
