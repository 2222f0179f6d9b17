"""
Evaluator module for Symflow Project
This module computes the least fixpoint of a stratified program, semi-naively or naively.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import FunctorError, ResourceLimit, SafetyError
from .functors import EvaluationContext, FunctorRegistry
from .program import (
    Arithmetic,
    Atom,
    Comparison,
    ComparisonOp,
    FunctorCall,
    NilConst,
    NumberConst,
    Program,
    RecordTerm,
    Rule,
    SymbolConst,
    Term,
    Var,
    Wildcard,
    is_pattern,
    term_variables,
)
from .relation import FactDB, Relation, Row
from .stratifier import Stratum, StratumPlan
from .values import NIL, RecordRef, RecordTable, Symbol, SymbolTable, U64_MASK, Value, is_number

logger = logging.getLogger(__name__)

Env = Dict[str, Value]


# --- compiled terms --------------------------------------------------------

class Node:
    __slots__ = ()

    def ground(self, bound: Set[str]) -> bool:
        return self.variables <= bound and not self.has_wildcard


class VarNode(Node):
    __slots__ = ("name", "variables", "has_wildcard")

    def __init__(self, name: str):
        self.name = name
        self.variables = frozenset((name,))
        self.has_wildcard = False


class WildNode(Node):
    __slots__ = ("variables", "has_wildcard")

    def __init__(self):
        self.variables = frozenset()
        self.has_wildcard = True


class ConstNode(Node):
    __slots__ = ("value", "variables", "has_wildcard")

    def __init__(self, value: Value):
        self.value = value
        self.variables = frozenset()
        self.has_wildcard = False


class RecordNode(Node):
    __slots__ = ("fields", "variables", "has_wildcard")

    def __init__(self, fields: Sequence[Node]):
        self.fields = tuple(fields)
        self.variables = frozenset().union(*(f.variables for f in self.fields))
        self.has_wildcard = any(f.has_wildcard for f in self.fields)


class CallNode(Node):
    __slots__ = ("name", "args", "variables", "has_wildcard")

    def __init__(self, name: str, args: Sequence[Node]):
        self.name = name
        self.args = tuple(args)
        self.variables = frozenset().union(*(a.variables for a in self.args))
        self.has_wildcard = any(a.has_wildcard for a in self.args)


class ArithNode(Node):
    __slots__ = ("op", "left", "right", "variables", "has_wildcard")

    def __init__(self, op: str, left: Node, right: Node):
        self.op = op
        self.left = left
        self.right = right
        self.variables = left.variables | right.variables
        self.has_wildcard = left.has_wildcard or right.has_wildcard


# --- plan steps ------------------------------------------------------------

@dataclass
class ScanStep:
    relation: str
    from_delta: bool
    key_columns: Tuple[int, ...]
    key_nodes: Tuple[Node, ...]
    match_columns: Tuple[int, ...]
    match_nodes: Tuple[Node, ...]


@dataclass
class NegationStep:
    relation: str
    key_columns: Tuple[int, ...]
    key_nodes: Tuple[Node, ...]
    match_columns: Tuple[int, ...]
    match_nodes: Tuple[Node, ...]


@dataclass
class FilterStep:
    op: ComparisonOp
    left: Node
    right: Node


@dataclass
class BindStep:
    pattern: Node
    source: Node


@dataclass
class RulePlan:
    rule: Rule
    steps: List[Any] = field(default_factory=list)
    heads: List[Tuple[str, Tuple[Node, ...]]] = field(default_factory=list)
    delta_relation: Optional[str] = None


# --- evaluation ------------------------------------------------------------

@dataclass
class EvaluationStats:
    stratum: int
    relations: Tuple[str, ...]
    iterations: int = 0
    seconds: float = 0.0
    rows: int = 0


class Evaluator:
    """
    Fixpoint evaluator over one program, one stratum plan and one fact database.

    Rule plans are compiled once per (rule, delta atom) pair with a left-to-right
    greedy binding heuristic; any plan yields the same fixpoint.
    """

    def __init__(self, program: Program, plan: StratumPlan, symbols: SymbolTable,
                 records: RecordTable, functors: FunctorRegistry, workers: int = 1,
                 max_tuples: int = 50_000_000, max_iterations: Optional[int] = None):
        self.program = program
        self.plan = plan
        self.symbols = symbols
        self.records = records
        self.functors = functors
        self.workers = workers
        self.max_tuples = max_tuples
        self.max_iterations = max_iterations
        self.stats: List[EvaluationStats] = []
        self._context: Optional[EvaluationContext] = None
        self._plan_cache: Dict[Tuple[int, Optional[int]], RulePlan] = {}

    # compilation

    def _compile_term(self, term: Term) -> Node:
        if isinstance(term, Var):
            return VarNode(term.name)
        if isinstance(term, Wildcard):
            return WildNode()
        if isinstance(term, SymbolConst):
            return ConstNode(self.symbols.intern(term.text))
        if isinstance(term, NumberConst):
            return ConstNode(term.value)
        if isinstance(term, NilConst):
            return ConstNode(NIL)
        if isinstance(term, RecordTerm):
            return RecordNode([self._compile_term(f) for f in term.fields])
        if isinstance(term, FunctorCall):
            functor = self.functors.get(term.name)
            if functor.arity != len(term.args):
                raise FunctorError(f"@{term.name} expects {functor.arity} arguments, "
                                   f"got {len(term.args)}")
            return CallNode(term.name, [self._compile_term(a) for a in term.args])
        if isinstance(term, Arithmetic):
            return ArithNode(term.op, self._compile_term(term.left), self._compile_term(term.right))
        raise TypeError(f"unknown term {term!r}")

    def compile_rule(self, rule: Rule, delta_index: Optional[int]) -> RulePlan:
        """Order the body of `rule`, putting positive literal `delta_index` first."""
        plan = RulePlan(rule)
        positives = [(i, lit) for i, lit in enumerate(rule.body)
                     if isinstance(lit, Atom) and not lit.negated]
        pending: List[Any] = [lit for lit in rule.body
                              if not (isinstance(lit, Atom) and not lit.negated)]
        bound: Set[str] = set()

        def schedule_atom(index: int, atom: Atom, from_delta: bool):
            nodes = [self._compile_term(t) for t in atom.terms]
            key_cols, key_nodes, match_cols, match_nodes = [], [], [], []
            for column, node in enumerate(nodes):
                if node.ground(bound):
                    key_cols.append(column)
                    key_nodes.append(node)
                else:
                    match_cols.append(column)
                    match_nodes.append(node)
            plan.steps.append(ScanStep(atom.relation, from_delta, tuple(key_cols), tuple(key_nodes),
                                       tuple(match_cols), tuple(match_nodes)))
            bound.update(atom.variables())

        def flush():
            progress = True
            while progress:
                progress = False
                for literal in list(pending):
                    step = self._try_constraint(literal, bound)
                    if step is not None:
                        plan.steps.append(step)
                        pending.remove(literal)
                        if isinstance(step, BindStep):
                            bound.update(step.pattern.variables)
                        progress = True

        flush()
        while positives:
            best = None
            best_score = -1
            for index, atom in positives:
                if not all(set(term_variables(t)) <= bound for t in atom.terms if not is_pattern(t)):
                    continue
                score = sum(1 for t in atom.terms if set(term_variables(t)) <= bound and is_pattern(t))
                if index == delta_index:
                    score += len(atom.terms) + 1
                if score > best_score:
                    best, best_score = (index, atom), score
            if best is None:
                raise SafetyError(f"no evaluable literal order for rule: {rule}", rule.location)
            positives.remove(best)
            from_delta = best[0] == delta_index
            if from_delta:
                plan.delta_relation = best[1].relation
            schedule_atom(best[0], best[1], from_delta)
            flush()
        if pending:
            raise SafetyError(f"unbound constraint {pending[0]} in rule: {rule}", rule.location)

        for head in rule.heads:
            plan.heads.append((head.relation, tuple(self._compile_term(t) for t in head.terms)))
        return plan

    def _try_constraint(self, literal, bound: Set[str]):
        if isinstance(literal, Atom):
            if not literal.variables() <= bound:
                return None
            nodes = [self._compile_term(t) for t in literal.terms]
            key_cols = tuple(c for c, n in enumerate(nodes) if n.ground(bound))
            match_cols = tuple(c for c, n in enumerate(nodes) if not n.ground(bound))
            return NegationStep(literal.relation, key_cols, tuple(nodes[c] for c in key_cols),
                                match_cols, tuple(nodes[c] for c in match_cols))
        assert isinstance(literal, Comparison)
        left = self._compile_term(literal.left)
        right = self._compile_term(literal.right)
        if left.ground(bound) and right.ground(bound):
            return FilterStep(literal.op, left, right)
        if literal.op is ComparisonOp.EQ:
            if right.ground(bound) and is_pattern(literal.left):
                return BindStep(left, right)
            if left.ground(bound) and is_pattern(literal.right):
                return BindStep(right, left)
        return None

    def _plan(self, rule_id: int, rule: Rule, delta_index: Optional[int]) -> RulePlan:
        key = (rule_id, delta_index)
        plan = self._plan_cache.get(key)
        if plan is None:
            plan = self.compile_rule(rule, delta_index)
            self._plan_cache[key] = plan
        return plan

    # term evaluation

    def evaluate_node(self, node: Node, env: Env) -> Value:
        if isinstance(node, VarNode):
            return env[node.name]
        if isinstance(node, ConstNode):
            return node.value
        if isinstance(node, RecordNode):
            return self.records.pack([self.evaluate_node(f, env) for f in node.fields])
        if isinstance(node, CallNode):
            args = tuple(self.evaluate_node(a, env) for a in node.args)
            return self.functors.call(node.name, args, self._context)
        if isinstance(node, ArithNode):
            return self._arithmetic(node.op, self.evaluate_node(node.left, env),
                                    self.evaluate_node(node.right, env))
        raise SafetyError("wildcard cannot be evaluated")

    @staticmethod
    def _arithmetic(op: str, left: Value, right: Value) -> Value:
        if not (is_number(left) and is_number(right)):
            raise FunctorError(f"arithmetic {op} needs numbers, got {left!r} and {right!r}")
        if op == "+":
            return (left + right) & U64_MASK
        if op == "-":
            return (left - right) & U64_MASK
        if op == "*":
            return (left * right) & U64_MASK
        if right == 0:
            raise FunctorError(f"division by zero in {left} {op} 0")
        return left // right if op == "/" else left % right

    def match_node(self, node: Node, value: Value, env: Env) -> Optional[Env]:
        if isinstance(node, VarNode):
            current = env.get(node.name)
            if current is None:
                bound_env = dict(env)
                bound_env[node.name] = value
                return bound_env
            return env if current == value else None
        if isinstance(node, WildNode):
            return env
        if isinstance(node, ConstNode):
            return env if node.value == value else None
        if isinstance(node, RecordNode):
            if not isinstance(value, RecordRef):
                return None
            fields = self.records.unpack(value)
            if len(fields) != len(node.fields):
                return None
            for sub, field_value in zip(node.fields, fields):
                env = self.match_node(sub, field_value, env)
                if env is None:
                    return None
            return env
        return env if self.evaluate_node(node, env) == value else None

    def _compare(self, op: ComparisonOp, left: Value, right: Value) -> bool:
        if op is ComparisonOp.EQ:
            return left == right
        if op is ComparisonOp.NE:
            return left != right
        if is_number(left) and is_number(right):
            a, b = left, right
        elif isinstance(left, Symbol) and isinstance(right, Symbol):
            a, b = self.symbols.resolve(left), self.symbols.resolve(right)
        else:
            raise FunctorError(f"cannot order {left!r} and {right!r}")
        if op is ComparisonOp.LT:
            return a < b
        if op is ComparisonOp.LE:
            return a <= b
        if op is ComparisonOp.GT:
            return a > b
        return a >= b

    # rule execution

    def run_plan(self, plan: RulePlan, full: Dict[str, Relation],
                 delta: Optional[Relation] = None) -> Dict[str, Set[Row]]:
        out: Dict[str, Set[Row]] = {name: set() for name, _ in plan.heads}
        self._execute(plan, 0, {}, full, delta, out)
        return out

    def _execute(self, plan: RulePlan, index: int, env: Env, full: Dict[str, Relation],
                 delta: Optional[Relation], out: Dict[str, Set[Row]]):
        if index == len(plan.steps):
            for relation, nodes in plan.heads:
                out[relation].add(tuple(self.evaluate_node(n, env) for n in nodes))
            return
        step = plan.steps[index]
        if isinstance(step, ScanStep):
            source = delta if step.from_delta else full.get(step.relation)
            if source is None:
                return
            key = tuple(self.evaluate_node(n, env) for n in step.key_nodes)
            for row in source.lookup(step.key_columns, key):
                bound_env = env
                for column, node in zip(step.match_columns, step.match_nodes):
                    bound_env = self.match_node(node, row[column], bound_env)
                    if bound_env is None:
                        break
                if bound_env is not None:
                    self._execute(plan, index + 1, bound_env, full, delta, out)
        elif isinstance(step, NegationStep):
            relation = full.get(step.relation)
            if relation is not None:
                key = tuple(self.evaluate_node(n, env) for n in step.key_nodes)
                if not step.match_columns:
                    if relation.contains_matching(step.key_columns, key):
                        return
                else:
                    for row in relation.lookup(step.key_columns, key):
                        matched = env
                        for column, node in zip(step.match_columns, step.match_nodes):
                            matched = self.match_node(node, row[column], matched)
                            if matched is None:
                                break
                        if matched is not None:
                            return
            self._execute(plan, index + 1, env, full, delta, out)
        elif isinstance(step, FilterStep):
            left = self.evaluate_node(step.left, env)
            right = self.evaluate_node(step.right, env)
            if self._compare(step.op, left, right):
                self._execute(plan, index + 1, env, full, delta, out)
        else:
            value = self.evaluate_node(step.source, env)
            bound_env = self.match_node(step.pattern, value, env)
            if bound_env is not None:
                self._execute(plan, index + 1, bound_env, full, delta, out)

    # fixpoint drivers

    def _prepare(self, db: FactDB):
        for name, decl in self.program.relations.items():
            db.declare(name, decl.arity)
        self._context = EvaluationContext(self.symbols, self.records, db)

    def _merge(self, db: FactDB, results: Iterable[Dict[str, Set[Row]]]) -> Dict[str, Set[Row]]:
        derived: Dict[str, Set[Row]] = {}
        for result in results:
            for name, rows in result.items():
                derived.setdefault(name, set()).update(rows)
        added: Dict[str, Set[Row]] = {}
        for name in sorted(derived):
            relation = db.relation(name)
            new_rows = relation.insert(derived[name])
            if len(relation) > self.max_tuples:
                raise ResourceLimit(f"relation {name} exceeded {self.max_tuples} tuples")
            if new_rows:
                added[name] = new_rows
        return added

    def _run_tasks(self, pool: Optional[ThreadPoolExecutor], tasks: List[Tuple]) -> List[Dict[str, Set[Row]]]:
        if pool is None or len(tasks) <= 1:
            return [self.run_plan(*task) for task in tasks]
        return list(pool.map(lambda task: self.run_plan(*task), tasks))

    def _partition(self, name: str, arity: int, rows: Set[Row]) -> List[Relation]:
        if self.workers <= 1 or len(rows) < 2 * self.workers:
            return [Relation(name, arity, rows)]
        ordered = list(rows)
        size = -(-len(ordered) // self.workers)
        return [Relation(name, arity, ordered[i:i + size]) for i in range(0, len(ordered), size)]

    def _check_iterations(self, stratum: Stratum, iteration: int):
        if self.max_iterations is not None and iteration > self.max_iterations:
            raise ResourceLimit(f"stratum {sorted(stratum.relations)} exceeded "
                                f"{self.max_iterations} iterations")

    def evaluate_semi_naive(self, db: FactDB) -> FactDB:
        self._prepare(db)
        pool = ThreadPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        try:
            for stratum in self.plan.strata:
                self._evaluate_stratum(db, stratum, pool)
        finally:
            if pool is not None:
                pool.shutdown(wait=True)
        return db

    def _evaluate_stratum(self, db: FactDB, stratum: Stratum, pool: Optional[ThreadPoolExecutor]):
        started = time.perf_counter()
        stats = EvaluationStats(stratum.index, tuple(sorted(stratum.relations)))
        rule_ids = {id(rule): n for n, rule in enumerate(self.program.rules)}
        full = db.relations

        tasks = [(self._plan(rule_ids[id(rule)], rule, None), full, None) for rule in stratum.rules]
        delta = self._merge(db, self._run_tasks(pool, tasks))
        stats.iterations = 1

        recursive = []
        for rule in stratum.rules:
            for index, literal in enumerate(rule.body):
                if isinstance(literal, Atom) and not literal.negated and literal.relation in stratum.relations:
                    recursive.append((rule, index, literal.relation))

        while delta and recursive:
            stats.iterations += 1
            self._check_iterations(stratum, stats.iterations)
            tasks = []
            for rule, index, relation in recursive:
                rows = delta.get(relation)
                if not rows:
                    continue
                plan = self._plan(rule_ids[id(rule)], rule, index)
                for chunk in self._partition(relation, db.relation(relation).arity, rows):
                    tasks.append((plan, full, chunk))
            delta = self._merge(db, self._run_tasks(pool, tasks))
            logger.debug(f"Stratum {stratum.index} iteration {stats.iterations}: "
                         f"{sum(len(r) for r in delta.values())} new tuples")

        stats.seconds = time.perf_counter() - started
        stats.rows = sum(len(db.relation(name)) for name in stratum.relations)
        self.stats.append(stats)
        logger.debug(f"Stratum {stratum.index} {list(stats.relations)} done: "
                     f"{stats.iterations} iterations, {stats.rows} tuples, {stats.seconds:.3f}s")

    def evaluate_naive(self, db: FactDB) -> FactDB:
        self._prepare(db)
        rule_ids = {id(rule): n for n, rule in enumerate(self.program.rules)}
        for stratum in self.plan.strata:
            started = time.perf_counter()
            stats = EvaluationStats(stratum.index, tuple(sorted(stratum.relations)))
            changed = True
            while changed:
                stats.iterations += 1
                self._check_iterations(stratum, stats.iterations)
                results = [self.run_plan(self._plan(rule_ids[id(rule)], rule, None), db.relations)
                           for rule in stratum.rules]
                changed = bool(self._merge(db, results))
            stats.seconds = time.perf_counter() - started
            stats.rows = sum(len(db.relation(name)) for name in stratum.relations)
            self.stats.append(stats)
        return db
