"""
SMT-LIB printer module for Symflow Project
This module renders expression constraints as QF_BV queries with let bindings,
inlined operator templates and forall*-bound variables.
"""

import logging
import re
from dataclasses import dataclass, field
from itertools import count
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from ..expr.errors import UnknownOperator
from ..expr.expression import Expr, variables
from ..expr.operators import OperatorTable
from .errors import CyclicLets, NoTemplate, SmtError
from .magic import MagicPool

logger = logging.getLogger(__name__)

_SIMPLE_SYMBOL = re.compile(r"[A-Za-z~!$%^&*_\-+=<>?/][A-Za-z0-9~!@$%^&*_\-+=<>.?/]*\Z")
_RESERVED = {"let", "assert", "ite", "forall", "exists", "_", "!", "as", "par"}


def smt_symbol(name: str) -> str:
    """Quote a variable name with |...| unless it is already a simple SMT-LIB symbol."""
    if _SIMPLE_SYMBOL.match(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise SmtError(f"variable name {name!r} cannot be written as an SMT-LIB symbol")
    return f"|{name}|"


def bv_literal(value: int, width: int) -> str:
    value &= (1 << width) - 1
    if width % 4 == 0:
        return f"#x{value:0{width // 4}x}"
    return f"#b{value:0{width}b}"


def inline_operator(op: str, left_text: str, right_text: Optional[str] = None, *,
                    table: Optional[OperatorTable] = None, width: int = 256) -> str:
    """
    Render a templated operator inline.

    Args:
        op: canonical or aliased operator name
        left_text: rendered first operand
        right_text: rendered second operand, None for unary operators
        table: operator table
        width: bit-width of the constants in the template

    Raises:
        NoTemplate: the operator renders through a direct SMT-LIB function
        UnknownOperator: op is not in the table
    """
    spec = (table or OperatorTable.default()).get(op)
    if spec.smt_template is None:
        raise NoTemplate(f"{spec.name} renders directly as {spec.smt_function or 'an expansion'}")
    return spec.smt_template.format(
        a=left_text, b=right_text, one=bv_literal(1, width), zero=bv_literal(0, width))


@dataclass(frozen=True)
class SmtQuery:
    """A rendered query plus what the solver bridge needs to read its answer."""
    constraint: Expr
    bound_vars: Tuple[str, ...]
    lets: Tuple[Tuple[str, Expr], ...]
    logic: str
    text: str
    free_vars: Tuple[str, ...] = field(default_factory=tuple)
    width: int = 256


def order_lets(lets: Sequence[Tuple[str, Expr]]) -> List[Tuple[str, Expr]]:
    """
    Dependency order: each binding after every let variable it mentions, ties
    broken by the given order.

    Raises:
        CyclicLets: bindings depend on each other circularly
    """
    position = {}
    for index, (var, _) in enumerate(lets):
        if var in position:
            raise CyclicLets(f"let variable {var} is bound twice")
        position[var] = index

    graph = nx.DiGraph()
    graph.add_nodes_from(position)
    for var, expr in lets:
        for used in variables(expr):
            if used in position:
                graph.add_edge(used, var)
    try:
        order = list(nx.lexicographical_topological_sort(graph, key=position.__getitem__))
    except nx.NetworkXUnfeasible as e:
        cycle = [edge[0] for edge in nx.find_cycle(graph)]
        raise CyclicLets(f"let bindings form a cycle through {', '.join(cycle)}") from e
    return [lets[position[var]] for var in order]


class SmtPrinter:
    """Renders expressions over one operator table, width and magic pool."""

    def __init__(self, table: Optional[OperatorTable] = None, width: int = 256,
                 pool: Optional[MagicPool] = None, logic: str = "QF_BV",
                 use_define_fun: bool = False):
        self.table = table or OperatorTable.default()
        self.width = width
        self.pool = pool or MagicPool()
        self.logic = logic
        self.use_define_fun = use_define_fun

    def render(self, e: Expr, used_templates: Optional[Dict[str, str]] = None) -> str:
        """SMT-LIB term for e."""
        temps = count()
        return self._render(e, used_templates, temps)

    def _render(self, e: Expr, used: Optional[Dict[str, str]], temps) -> str:
        if e.is_constant:
            return bv_literal(e.value, self.width)
        if e.is_leaf:
            return smt_symbol(e.base)

        spec = self.table.get(e.base)
        if len(e.children()) != spec.arity:
            raise UnknownOperator(f"{spec.name} takes {spec.arity} operand(s), found {len(e.children())}")
        left = self._render(e.left, used, temps)
        right = self._render(e.right, used, temps) if spec.arity == 2 else None

        if spec.smt_function is not None:
            return f"({spec.smt_function} {left})" if right is None else f"({spec.smt_function} {left} {right})"
        if spec.name == "EXP":
            return self._render_exp(left, e.right, temps)
        if self.use_define_fun and spec.smt_name and used is not None:
            used[spec.smt_name] = spec.name
            return f"({spec.smt_name} {left})" if right is None else f"({spec.smt_name} {left} {right})"
        return inline_operator(spec.name, left, right, table=self.table, width=self.width)

    def _render_exp(self, base_text: str, exponent: Expr, temps) -> str:
        if not exponent.is_constant:
            raise UnknownOperator("EXP renders to SMT-LIB only with a constant exponent")
        power = exponent.value
        if power == 0:
            return bv_literal(1, self.width)
        # Square-and-multiply with one let per squaring step.
        bindings: List[Tuple[str, str]] = []
        factors: List[str] = []
        current = base_text
        while power:
            name = f"|$exp{next(temps)}|"
            bindings.append((name, current))
            if power & 1:
                factors.append(name)
            power >>= 1
            if power:
                current = f"(bvmul {name} {name})"
        body = factors[0]
        for factor in factors[1:]:
            body = f"(bvmul {body} {factor})"
        for name, value in reversed(bindings):
            body = f"(let (({name} {value})) {body})"
        return body

    def define_funs(self, used: Dict[str, str]) -> List[str]:
        lines = []
        sort = f"(_ BitVec {self.width})"
        for smt_name in sorted(used):
            spec = self.table.get(used[smt_name])
            if spec.arity == 1:
                params, body = f"((a {sort}))", inline_operator(spec.name, "a", table=self.table, width=self.width)
            else:
                params = f"((a {sort}) (b {sort}))"
                body = inline_operator(spec.name, "a", "b", table=self.table, width=self.width)
            lines.append(f"(define-fun {smt_name} {params} {sort} {body})")
        return lines

    def print_to_smt(self, constraint: Expr, bound_vars: Iterable[str] = (),
                     lets: Sequence[Tuple[str, Expr]] = ()) -> SmtQuery:
        """
        Render `constraint = 1` as an SMT-LIB query.

        Args:
            constraint: expression asserted equal to one
            bound_vars: forall*-bound variables, pinned to magic constants in order
            lets: (variable, expression) bindings, in any order

        Returns:
            The SmtQuery with declarations, nested lets and asserts

        Raises:
            CyclicLets: the let bindings depend on each other circularly
            UnknownOperator: an operator has no SMT-LIB rendering
            IndexOutOfRange: more bound variables than magic constants
        """
        bound = tuple(dict.fromkeys(bound_vars))
        ordered = order_lets(list(lets))
        let_vars = {var for var, _ in ordered}

        mentioned = set(variables(constraint))
        for _, expr in ordered:
            mentioned |= variables(expr)
        free = tuple(sorted(mentioned - let_vars - set(bound)))

        used: Optional[Dict[str, str]] = {} if self.use_define_fun else None
        temps = count()
        body = f"(= {bv_literal(1, self.width)} {self._render(constraint, used, temps)})"
        for var, expr in reversed(ordered):
            body = f"(let (({smt_symbol(var)} {self._render(expr, used, temps)})) {body})"

        sort = f"(_ BitVec {self.width})"
        lines = [f"(declare-const {smt_symbol(var)} {sort})" for var in free + bound]
        if used:
            lines.extend(self.define_funs(used))
        lines.append(f"(assert {body})")
        for index, var in enumerate(bound):
            magic = self.pool.magic_constant(index)
            lines.append(f"(assert (= {smt_symbol(var)} {bv_literal(magic, self.width)}))")

        text = "\n".join(lines)
        logger.debug(f"Rendered query with {len(free)} free and {len(bound)} bound variable(s)")
        return SmtQuery(constraint, bound, tuple(ordered), self.logic, text, free, self.width)


_DECLARE_RE = re.compile(r"\(declare-const\s+(\|[^|]*\||[^\s()]+)\s")
_PIN_RE = re.compile(r"\(assert\s+\(=\s+(\|[^|]*\||[^\s()]+)\s+#[xb][0-9a-fA-F]+\)\)")


def declared_free_vars(text: str) -> Tuple[str, ...]:
    """Free variables of query text that was not produced by this process's printer."""
    declared = [m.group(1) for m in _DECLARE_RE.finditer(text)]
    pinned = {m.group(1) for m in _PIN_RE.finditer(text)}
    return tuple(name.strip("|") for name in declared if name not in pinned)
