"""
Operators module for Symflow Project
This module provides the operator table: arity, algebraic classification and SMT-LIB rendering.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple, Union

from .errors import UnknownOperator

logger = logging.getLogger(__name__)

# Constant specs: an int, or "ones" for the all-ones value of the current width.
ConstSpec = Union[int, str]


def const_value(spec: ConstSpec, width: int) -> int:
    return (1 << width) - 1 if spec == "ones" else spec


class SolutionSide(Enum):
    """Position of the free variable in op(l, r)"""
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class LinearSolution:
    """
    op(x, r) = rhs is solved by x = inverse(rhs, r) for LEFT, and op(l, x) = rhs by
    x = inverse(l, rhs) for RIGHT. Guarded pairs are only emitted after the
    solution has been substituted back and folded to true.
    """
    op: str
    inverse: str
    side: SolutionSide = SolutionSide.LEFT
    guarded: bool = False


@dataclass(frozen=True)
class OperatorSpec:
    """
    Everything the solvers need to know about one operator.

    Attributes:
        name: canonical operator name
        arity: 1 or 2
        smt_function: SMT-LIB function rendering the operator directly
        smt_template: inline template over {a}, {b}, {one}, {zero}
        smt_name: name used when templates are emitted as define-fun
        associative / commutative / idempotent: algebraic flags
        canceling_result: value of op(x, x) when it is a constant
        left_identity / right_identity: e with op(e, x) = x / op(x, e) = x
        left_zero / right_zero: z with op(z, x) = z / op(x, z) = z
        distributes_over: operators this one distributes over from both sides
        mutually_exclusive_with: comparisons that cannot hold together with this one
        involution: op(op(x)) = x
        boolean: result is always 0 or 1
    """
    name: str
    arity: int
    smt_function: Optional[str] = None
    smt_template: Optional[str] = None
    smt_name: Optional[str] = None
    associative: bool = False
    commutative: bool = False
    idempotent: bool = False
    canceling_result: Optional[int] = None
    left_identity: Optional[ConstSpec] = None
    right_identity: Optional[ConstSpec] = None
    left_zero: Optional[ConstSpec] = None
    right_zero: Optional[ConstSpec] = None
    distributes_over: Tuple[str, ...] = ()
    mutually_exclusive_with: Tuple[str, ...] = ()
    involution: bool = False
    boolean: bool = False


_ITE = "(ite {cond} {one} {zero})"

DEFAULT_OPERATORS: Tuple[OperatorSpec, ...] = (
    OperatorSpec("ADD", 2, smt_function="bvadd", associative=True, commutative=True,
                 left_identity=0, right_identity=0),
    OperatorSpec("SUB", 2, smt_function="bvsub", canceling_result=0, right_identity=0),
    OperatorSpec("MUL", 2, smt_function="bvmul", associative=True, commutative=True,
                 left_identity=1, right_identity=1, left_zero=0, right_zero=0,
                 distributes_over=("ADD", "SUB")),
    OperatorSpec("DIV", 2, smt_template="(ite (= {b} {zero}) {zero} (bvudiv {a} {b}))",
                 smt_name="my_bvudiv", right_identity=1, left_zero=0, right_zero=0),
    OperatorSpec("MOD", 2, smt_template="(ite (= {b} {zero}) {zero} (bvurem {a} {b}))",
                 smt_name="my_bvurem", canceling_result=0, left_zero=0, right_zero=0),
    OperatorSpec("EXP", 2, right_identity=1),
    OperatorSpec("SHL", 2, smt_function="bvshl", right_identity=0, left_zero=0),
    OperatorSpec("SHR", 2, smt_function="bvlshr", right_identity=0, left_zero=0),
    OperatorSpec("AND", 2, smt_function="bvand", associative=True, commutative=True, idempotent=True,
                 left_identity="ones", right_identity="ones", left_zero=0, right_zero=0,
                 distributes_over=("OR", "XOR")),
    OperatorSpec("OR", 2, smt_function="bvor", associative=True, commutative=True, idempotent=True,
                 left_identity=0, right_identity=0, left_zero="ones", right_zero="ones",
                 distributes_over=("AND",)),
    OperatorSpec("XOR", 2, smt_function="bvxor", associative=True, commutative=True,
                 canceling_result=0, left_identity=0, right_identity=0),
    OperatorSpec("NOT", 1, smt_function="bvnot", involution=True),
    OperatorSpec("EQ", 2, smt_template=_ITE.replace("{cond}", "(= {a} {b})"), smt_name="my_eq",
                 commutative=True, canceling_result=1, mutually_exclusive_with=("LT", "GT"),
                 boolean=True),
    OperatorSpec("LT", 2, smt_template=_ITE.replace("{cond}", "(bvult {a} {b})"), smt_name="my_bvlt",
                 canceling_result=0, mutually_exclusive_with=("GT", "EQ"), boolean=True),
    OperatorSpec("GT", 2, smt_template=_ITE.replace("{cond}", "(bvugt {a} {b})"), smt_name="my_bvgt",
                 canceling_result=0, mutually_exclusive_with=("LT", "EQ"), boolean=True),
    OperatorSpec("SLT", 2, smt_template=_ITE.replace("{cond}", "(bvslt {a} {b})"), smt_name="my_bvslt",
                 canceling_result=0, boolean=True),
    OperatorSpec("ISZERO", 1, smt_template=_ITE.replace("{cond}", "(= {a} {zero})"), smt_name="isZero",
                 boolean=True),
)

DEFAULT_ALIASES: Dict[str, str] = {
    "isZero": "ISZERO",
    "my_eq": "EQ",
    "my_bvlt": "LT",
    "my_bvgt": "GT",
    "my_bvslt": "SLT",
    "my_bvudiv": "DIV",
    "my_bvurem": "MOD",
}

DEFAULT_LINEAR_SOLUTIONS: Tuple[LinearSolution, ...] = (
    LinearSolution("ADD", "SUB"),
    LinearSolution("SUB", "ADD"),
    LinearSolution("SUB", "SUB", SolutionSide.RIGHT),
    LinearSolution("XOR", "XOR"),
    LinearSolution("OR", "OR", guarded=True),
    LinearSolution("MOD", "ADD", guarded=True),
    LinearSolution("MUL", "DIV", guarded=True),
)


@dataclass
class OperatorTable:
    """Operator specs by canonical name, plus aliases and linear solution pairs."""
    specs: Dict[str, OperatorSpec] = field(default_factory=dict)
    aliases: Dict[str, str] = field(default_factory=dict)
    linear_solutions: List[LinearSolution] = field(default_factory=list)

    @classmethod
    def default(cls) -> "OperatorTable":
        return cls(
            specs={spec.name: spec for spec in DEFAULT_OPERATORS},
            aliases=dict(DEFAULT_ALIASES),
            linear_solutions=list(DEFAULT_LINEAR_SOLUTIONS),
        )

    def canonical(self, name: str) -> str:
        name = self.aliases.get(name, name)
        if name not in self.specs:
            raise UnknownOperator(f"unknown operator {name!r}")
        return name

    def get(self, name: str) -> OperatorSpec:
        return self.specs[self.canonical(name)]

    def __contains__(self, name: str) -> bool:
        return self.aliases.get(name, name) in self.specs

    def __iter__(self) -> Iterator[OperatorSpec]:
        return iter(self.specs[name] for name in sorted(self.specs))

    def right_inverses(self) -> List[Tuple[str, str]]:
        """(op, inv) with inv(op(x, y), y) = x for all x, y."""
        return [(s.op, s.inverse) for s in self.linear_solutions
                if s.side is SolutionSide.LEFT and not s.guarded]
