"""
Analysis module for Symflow Project
This module provides the Analysis base class: a Datalog program, the functors it
needs, fact ingestion and evaluation on a dedicated engine instance.
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

from ..engine.datalog_engine import DatalogEngine, EngineConfig
from ..engine.program import Program
from ..engine.relation import FactDB

logger = logging.getLogger(__name__)

# A fact directory, or relation name -> rows of plain Python values.
FactSource = Union[str, Path, Mapping[str, Iterable[Tuple[Any, ...]]]]


@dataclass
class AnalysisResult:
    """Evaluated fact database plus decoded output relations."""
    program: Program
    db: FactDB
    outputs: Dict[str, Set[Tuple[Any, ...]]] = field(default_factory=dict)
    seconds: float = 0.0

    def __getitem__(self, relation: str) -> Set[Tuple[Any, ...]]:
        return self.outputs[relation]


class Analysis(ABC):
    """
    Base class for analyses run on their own engine instance.

    Subclasses name their program and register the functors it calls; the
    base class parses once, ingests facts and evaluates.
    """

    name = "analysis"
    reserved_prefixes: Tuple[str, ...] = ()

    def __init__(self, engine_config: Optional[EngineConfig] = None):
        self.engine = DatalogEngine(engine_config or EngineConfig())
        self._program: Optional[Program] = None
        self.stats: Dict[str, Any] = {"runs": 0, "total_seconds": 0.0}
        self.register_functors(self.engine)

    @property
    @abstractmethod
    def program_path(self) -> Path:
        """Datalog source of the analysis"""

    @abstractmethod
    def register_functors(self, engine: DatalogEngine):
        """Register every functor the program calls"""

    def extra_facts(self) -> Dict[str, List[Tuple[Any, ...]]]:
        """Facts supplied by configuration rather than by the fact source"""
        return {}

    @property
    def program(self) -> Program:
        if self._program is None:
            path = Path(self.program_path)
            self._program = self.engine.parse_program(path.read_text(encoding="utf-8"))
            logger.info(f"Parsed {self.name} program {path.name}")
        return self._program

    def load(self, facts: FactSource) -> FactDB:
        """
        Raises:
            FactIOError: a fact directory is missing or unreadable
        """
        if isinstance(facts, (str, Path)):
            db = self.engine.load_facts(Path(facts), self.program, self.reserved_prefixes)
        else:
            db = self.engine.new_factdb(self.program)
            for relation, rows in facts.items():
                rows = list(rows)
                if rows:
                    db.add_python(relation, rows)
        for relation, rows in self.extra_facts().items():
            db.add_python(relation, rows)
        return db

    def run(self, facts: FactSource, naive: bool = False) -> AnalysisResult:
        """
        Evaluate the program over the facts.

        Args:
            facts: fact directory, or relation -> Python rows
            naive: use naive evaluation (the oracle) instead of semi-naive

        Returns:
            AnalysisResult with every output relation decoded
        """
        db = self.load(facts)
        started = time.perf_counter()
        result = self.engine.naive_evaluate(self.program, db) if naive else self.engine.evaluate(self.program, db)
        elapsed = time.perf_counter() - started
        self.stats["runs"] += 1
        self.stats["total_seconds"] += elapsed
        outputs = result.to_python(self.program.outputs)
        logger.info(f"{self.name} finished in {elapsed:.3f}s: "
                    + ", ".join(f"{name}={len(rows)}" for name, rows in outputs.items()))
        return AnalysisResult(self.program, result, outputs, elapsed)

    def get_stats(self) -> Dict[str, Any]:
        stats = dict(self.stats)
        stats["engine"] = self.engine.get_stats()
        return stats
