"""
Native Solver module for Symflow Project
This module runs the bounded bottom-up algebraic solver of solver.dl and exposes it
through a Python facade: universes, rewrites, normal forms and linear solutions.
"""

import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from ..engine.datalog_engine import DatalogEngine, EngineConfig
from ..engine.program import Program
from ..engine.relation import FactDB
from ..expr.codec import ExprCodec, register_expr_functors
from ..expr.concrete import DEFAULT_WIDTH
from ..expr.expression import Expr, canonical_constant, order_key, variables
from ..expr.operators import OperatorTable, SolutionSide, const_value
from .errors import NoStrategy, NotInUniverse, SeedTooLarge
from .functors import register_native_functors

logger = logging.getLogger(__name__)

SOLVER_PROGRAM = Path(__file__).parent / "solver.dl"

# Round k re-asserts round k-1's constraints, plus each one with a solved
# variable substituted by its value.
DEFAULT_FEED = """
Solver_{k}.Constraint(c) :- Solver_{k-1}.Constraint(c).
Solver_{k}.Constraint(c2) :-
    Solver_{k-1}.Constraint(c), Solver_{k-1}.ValueForFreeVariable(x, v), c2 = @substitute(c, x, v).
"""


@dataclass
class NativeSolverConfig:
    """Native solver knobs"""
    max_size: int = 10
    width: int = DEFAULT_WIDTH
    workers: int = 1

    def __post_init__(self):
        if self.max_size < 1:
            raise ValueError("native size bound must be at least 1")
        if self.width < 1:
            raise ValueError("bit-width must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class Universe:
    """The bounded, subexpression-closed set of expressions one run reasons over."""
    seeds: FrozenSet[Expr]
    max_size: int
    members: FrozenSet[Expr]
    free_vars: FrozenSet[str]
    bound_vars: FrozenSet[str]

    def __contains__(self, e: Expr) -> bool:
        return e in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class RoundOutput:
    """Outputs of one solver instance."""
    index: int
    equals: Set[Tuple[Expr, Expr]] = field(default_factory=set)
    normal_forms: Dict[Expr, Expr] = field(default_factory=dict)
    values: Set[Tuple[str, Expr]] = field(default_factory=set)


@dataclass
class ConditionResult:
    """
    What the native solver knows about one condition.

    Attributes:
        condition: the condition as asked
        normal_form: least member of its Equals class
        solutions: candidate values per free variable, each validated by substitution
    """
    condition: Expr
    normal_form: Expr
    solutions: Dict[str, List[Expr]] = field(default_factory=dict)

    @property
    def constant(self) -> Optional[int]:
        return self.normal_form.value if self.normal_form.is_constant else None


def _const_expr(spec, width: int) -> Tuple[str, None, None]:
    return canonical_constant(const_value(spec, width), width), None, None


def operator_facts(table: OperatorTable, width: int = DEFAULT_WIDTH) -> Dict[str, List[Tuple[Any, ...]]]:
    """
    Operator classification relations for solver.dl, as plain Python rows.

    Expression columns are `(base, left, right)` tuples.
    """
    facts: Dict[str, List[Tuple[Any, ...]]] = {
        "AssociativeOperator": [],
        "CommutativeOperator": [],
        "IdempotentOperator": [],
        "InvolutionOperator": [],
        "CancelingOperator": [],
        "LeftIdentity": [],
        "RightIdentity": [],
        "LeftZero": [],
        "RightZero": [],
        "DistributesOver": [],
        "MutuallyExclusive": [],
        "RightInverse": [],
        "LinearSolutionOperators": [],
        "RightLinearSolutionOperators": [],
        "GuardedSolution": [],
    }
    for spec in table:
        flags = (("AssociativeOperator", spec.associative), ("CommutativeOperator", spec.commutative),
                 ("IdempotentOperator", spec.idempotent), ("InvolutionOperator", spec.involution))
        for relation, flag in flags:
            if flag:
                facts[relation].append((spec.name,))
        if spec.canceling_result is not None:
            facts["CancelingOperator"].append((spec.name, _const_expr(spec.canceling_result, width)))
        elements = (("LeftIdentity", spec.left_identity), ("RightIdentity", spec.right_identity),
                    ("LeftZero", spec.left_zero), ("RightZero", spec.right_zero))
        for relation, element in elements:
            if element is not None:
                facts[relation].append((spec.name, _const_expr(element, width)))
        facts["DistributesOver"].extend((spec.name, over) for over in spec.distributes_over)
        facts["MutuallyExclusive"].extend((spec.name, other) for other in spec.mutually_exclusive_with)

    facts["RightInverse"].extend(table.right_inverses())
    for solution in table.linear_solutions:
        pair = (solution.op, solution.inverse)
        if solution.side is SolutionSide.LEFT:
            facts["LinearSolutionOperators"].append(pair)
            if solution.guarded:
                facts["GuardedSolution"].append(pair)
        elif solution.guarded:
            logger.debug(f"Skipping guarded right-side solution {pair}: right-side pairs are unguarded")
        else:
            facts["RightLinearSolutionOperators"].append(pair)
    return facts


class NativeSolver:
    """
    Facade over solver.dl running on a private engine instance.

    Every query is one evaluation of the component over a fresh fact database;
    calls are serialized because the engine's evaluate is not re-entrant.
    """

    def __init__(self, config: Optional[NativeSolverConfig] = None, table: Optional[OperatorTable] = None):
        self.config = config or NativeSolverConfig()
        self.table = table or OperatorTable.default()
        self.engine = DatalogEngine(EngineConfig(workers=self.config.workers))
        self.codec: ExprCodec = register_expr_functors(self.engine)
        register_native_functors(self.engine, self.codec, self.table, self.config.width)
        self.source = SOLVER_PROGRAM.read_text(encoding="utf-8")
        self.facts = operator_facts(self.table, self.config.width)
        self._programs: Dict[Tuple[int, Optional[str]], Program] = {}
        self._conditions: Dict[Tuple[Expr, FrozenSet[str], int], ConditionResult] = {}
        self.lock = threading.RLock()
        self.stats: Dict[str, Any] = {
            "runs": 0,
            "condition_hits": 0,
            "total_seconds": 0.0,
            "last_universe_size": 0,
            "max_universe_size": 0,
        }
        logger.info(f"Native solver ready (size bound {self.config.max_size}, width {self.config.width})")

    # program construction

    def program(self, instances: int = 1, feed: Optional[str] = None) -> Program:
        """
        The solver component instantiated `instances` times.

        Args:
            instances: number of solver rounds
            feed: rules of a `Feed` component linking round k-1 to round k,
                written with `{k}` and `{k-1}` placeholders

        Raises:
            StratificationError: only on evaluation, when the feed closes a negative cycle
        """
        key = (instances, feed)
        with self.lock:
            cached = self._programs.get(key)
            if cached is not None:
                return cached
            text = f"{self.source}\n.init Solver[{instances}]\n"
            if feed:
                text += f".comp Feed {{\n{feed}\n}}\n.init Feed[{instances}]\n"
            program = self.engine.parse_program(text)
            self._programs[key] = program
            return program

    def canonicalize(self, e: Expr) -> Expr:
        """Rewrite every constant leaf to lowercase hex reduced modulo 2**width."""
        if e.is_constant:
            return Expr(canonical_constant(e.base, self.config.width))
        if e.is_leaf:
            return e
        left = self.canonicalize(e.left)
        right = self.canonicalize(e.right) if e.right is not None else None
        return e if left is e.left and right is e.right else Expr(e.base, left, right)

    def _insert(self, db: FactDB, relation: str, exprs: Iterable[Expr]):
        db.relation(relation).insert((self.codec.encode(e),) for e in exprs)

    def _run(self, instances: int, seeds: Iterable[Expr] = (), constraints: Iterable[Expr] = (),
             bound_vars: Iterable[str] = (), constants: Iterable[Expr] = (),
             max_size: Optional[int] = None, feed: Optional[str] = None) -> FactDB:
        max_size = max_size or self.config.max_size
        seeds = [self.canonicalize(e) for e in seeds]
        constraints = [self.canonicalize(e) for e in constraints]
        constants = [self.canonicalize(c) for c in constants]
        bound = set(bound_vars)
        free: Set[str] = set()
        for e in seeds + constraints:
            free |= variables(e)
        free -= bound

        with self.lock:
            program = self.program(instances, feed)
            db = self.engine.new_factdb(program)
            for relation, rows in self.facts.items():
                if rows:
                    db.add_python(relation, rows)
            for k in range(1, instances + 1):
                prefix = f"Solver_{k}."
                db.add_python(prefix + "MaxSize", [(max_size,)])
                if free:
                    db.add_python(prefix + "IsFreeVar", [(v,) for v in sorted(free)])
                if bound:
                    db.add_python(prefix + "IsBoundVar", [(v,) for v in sorted(bound)])
                self._insert(db, prefix + "InitialConstant", constants)
            if instances:
                self._insert(db, "Solver_1.SeedExpression", seeds)
                self._insert(db, "Solver_1.Constraint", constraints)

            started = time.perf_counter()
            result = self.engine.evaluate(program, db)
            elapsed = time.perf_counter() - started
            universe = len(result.rows("Solver_1.IsExpression"))
            self.stats["runs"] += 1
            self.stats["total_seconds"] += elapsed
            self.stats["last_universe_size"] = universe
            self.stats["max_universe_size"] = max(self.stats["max_universe_size"], universe)
        logger.debug(f"Native solver run: {instances} round(s), universe {universe}, {elapsed:.3f}s")
        return result

    def _exprs(self, db: FactDB, relation: str) -> Set[Expr]:
        return {self.codec.decode(row[0]) for row in db.rows(relation)}

    def _pairs(self, db: FactDB, relation: str) -> Set[Tuple[Expr, Expr]]:
        return {(self.codec.decode(a), self.codec.decode(b)) for a, b in db.rows(relation)}

    # operations

    def build_universe(self, seeds: Iterable[Expr], constants: Iterable[Expr] = (),
                       bound_vars: Iterable[str] = (), max_size: Optional[int] = None) -> Universe:
        """
        Least set holding the seeds and constants, closed under subexpressions,
        shrinking rewrites, constant complements and equalities, and folding.

        Raises:
            SeedTooLarge: a seed has more than max_size nodes
        """
        max_size = max_size or self.config.max_size
        seeds = frozenset(self.canonicalize(e) for e in seeds)
        for seed in seeds:
            if seed.size > max_size:
                raise SeedTooLarge(f"seed {seed} has {seed.size} nodes, bound is {max_size}")
        bound = frozenset(bound_vars)
        db = self._run(1, seeds, constants=constants, bound_vars=bound, max_size=max_size)
        free = frozenset(v for seed in seeds for v in variables(seed)) - bound
        return Universe(seeds, max_size, frozenset(self._exprs(db, "Solver_1.IsExpression")), free, bound)

    def rewrite_step(self, e: Expr, max_size: Optional[int] = None) -> Set[Tuple[Expr, Expr]]:
        """Single-axiom BaseEquals pairs whose left side is e."""
        e = self.canonicalize(e)
        db = self._run(1, [e], max_size=max_size)
        return {(a, b) for a, b in self._pairs(db, "Solver_1.BaseEquals") if a == e}

    def equals_relation(self, seeds: Iterable[Expr], max_size: Optional[int] = None) -> Set[Tuple[Expr, Expr]]:
        db = self._run(1, seeds, max_size=max_size)
        return self._pairs(db, "Solver_1.Equals")

    def normalize(self, e: Expr, max_size: Optional[int] = None) -> Expr:
        """
        Smallest member of e's Equals class, by node count then serialization.

        Raises:
            NotInUniverse: e exceeds the size bound, so it never enters the universe
        """
        e = self.canonicalize(e)
        db = self._run(1, [e], max_size=max_size)
        forms = [nf for source, nf in self._pairs(db, "Solver_1.NormalForm") if source == e]
        if not forms:
            raise NotInUniverse(f"{e} is not in the universe (size bound {max_size or self.config.max_size})")
        return forms[0]

    def solve_linear(self, equation: Expr, bound_vars: Iterable[str] = (),
                     max_size: Optional[int] = None) -> Set[Tuple[str, Expr]]:
        """
        Solutions of an equation `EQ(op(l, r), rhs)` for its free variables.

        Returns:
            (variable, value) pairs; each value substitutes back to true

        Raises:
            NoStrategy: op has no linear solution pair
        """
        equation = self.canonicalize(equation)
        if equation.base != "EQ" or equation.left is None or equation.left.is_leaf:
            raise NoStrategy(f"{equation} is not an equation over an operator application")
        op = self.table.canonical(equation.left.base)
        if not any(s.op == op for s in self.table.linear_solutions):
            raise NoStrategy(f"no linear solution pair for {op}")
        db = self._run(1, constraints=[equation], bound_vars=bound_vars, max_size=max_size)
        return {(x.base, value) for x, value in self._pairs(db, "Solver_1.ValueForFreeVariable")}

    def solve_condition(self, condition: Expr, bound_vars: Iterable[str] = (),
                        max_size: Optional[int] = None) -> ConditionResult:
        """
        Normal form and candidate solutions of one asserted condition.

        Answers are remembered per condition, bound variables and size bound.

        Raises:
            SeedTooLarge: the condition exceeds the size bound
        """
        max_size = max_size or self.config.max_size
        condition = self.canonicalize(condition)
        if condition.size > max_size:
            raise SeedTooLarge(f"condition has {condition.size} nodes, bound is {max_size}")
        key = (condition, frozenset(bound_vars), max_size)
        with self.lock:
            known = self._conditions.get(key)
            if known is not None:
                self.stats["condition_hits"] += 1
                return known
        db = self._run(1, [condition], [condition], key[1], max_size=max_size)
        forms = [nf for source, nf in self._pairs(db, "Solver_1.NormalForm") if source == condition]
        solutions: Dict[str, List[Expr]] = {}
        for x, value in self._pairs(db, "Solver_1.ValueForFreeVariable"):
            solutions.setdefault(x.base, []).append(value)
        for values in solutions.values():
            values.sort(key=order_key)
        result = ConditionResult(condition, forms[0] if forms else condition, solutions)
        with self.lock:
            self._conditions[key] = result
        return result

    def instantiate_component(self, instances: int, seeds: Iterable[Expr] = (),
                              constraints: Iterable[Expr] = (), bound_vars: Iterable[str] = (),
                              constants: Iterable[Expr] = (), feed: Optional[str] = DEFAULT_FEED,
                              max_size: Optional[int] = None) -> List[RoundOutput]:
        """
        Run `instances` chained copies of the solver; round 1 gets the inputs,
        round k gets whatever the feed rules derive from round k-1.

        Returns:
            One RoundOutput per round, in order; empty when instances is 0
        """
        if instances < 0:
            raise ValueError("instance count must be non-negative")
        if instances == 0:
            logger.debug("Zero solver instances requested; nothing to evaluate")
            return []
        db = self._run(instances, seeds, constraints, bound_vars, constants, max_size,
                       feed if instances > 1 else None)
        rounds = []
        for k in range(1, instances + 1):
            prefix = f"Solver_{k}."
            rounds.append(RoundOutput(
                index=k,
                equals=self._pairs(db, prefix + "Equals"),
                normal_forms=dict(self._pairs(db, prefix + "NormalForm")),
                values={(x.base, v) for x, v in self._pairs(db, prefix + "ValueForFreeVariable")},
            ))
        return rounds

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            stats = dict(self.stats)
        stats["engine"] = self.engine.get_stats()
        return stats
