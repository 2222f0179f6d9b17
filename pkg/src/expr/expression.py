"""
Expression module for Symflow Project
This module defines the binary expression tree shared by the solvers and the analyses.
"""

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .errors import EmptyList, MalformedExpr

FRESH_PREFIX = "$fresh_"

_HEX_RE = re.compile(r"0x[0-9a-fA-F]+\Z")


def is_constant_name(name: str) -> bool:
    return bool(_HEX_RE.match(name))


def canonical_constant(value, width: int = 256) -> str:
    """Lowercase hex without leading zeros, reduced modulo 2**width."""
    if isinstance(value, str):
        value = int(value, 16)
    return hex(value & ((1 << width) - 1))


@dataclass(frozen=True)
class Expr:
    """
    Node of a symbolic formula: `[base, left, right]`.

    Leaves have no children and a base that is either a hex constant ("0x..")
    or a variable name. Unary operators use the left child only.
    """
    base: str
    left: Optional["Expr"] = None
    right: Optional["Expr"] = None

    def __post_init__(self):
        if self.left is None and self.right is not None:
            raise MalformedExpr(f"{self.base}: right child without a left child")

    @classmethod
    def leaf(cls, name: str) -> "Expr":
        return cls(name)

    @classmethod
    def const(cls, value: int, width: int = 256) -> "Expr":
        return cls(canonical_constant(value, width))

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def is_constant(self) -> bool:
        return self.is_leaf and is_constant_name(self.base)

    @property
    def is_variable(self) -> bool:
        return self.is_leaf and not is_constant_name(self.base)

    @property
    def value(self) -> int:
        if not self.is_constant:
            raise MalformedExpr(f"{self.base} is not a constant")
        return int(self.base, 16)

    @cached_property
    def size(self) -> int:
        return 1 + (self.left.size if self.left else 0) + (self.right.size if self.right else 0)

    def children(self) -> Tuple["Expr", ...]:
        return tuple(c for c in (self.left, self.right) if c is not None)

    def __str__(self) -> str:
        return serialize(self)


# --- structure ---------------------------------------------------------------

def tree_size(e: Expr) -> int:
    return e.size


def iter_subexpressions(e: Expr) -> Iterator[Expr]:
    """Every subtree in preorder, repeated subtrees included."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if node.right is not None:
            stack.append(node.right)
        if node.left is not None:
            stack.append(node.left)


def subexpressions(e: Expr) -> Set[Expr]:
    return set(iter_subexpressions(e))


def variables(e: Expr) -> Set[str]:
    return {node.base for node in iter_subexpressions(e) if node.is_variable}


def substitute(e: Expr, mapping: Dict[str, Expr]) -> Expr:
    """Replace variable leaves by expressions."""
    if e.is_leaf:
        return mapping.get(e.base, e) if e.is_variable else e
    left = substitute(e.left, mapping)
    right = substitute(e.right, mapping) if e.right is not None else None
    if left is e.left and right is e.right:
        return e
    return Expr(e.base, left, right)


def flatten(conj_op: str, exprs: Sequence[Expr]) -> Expr:
    """
    Right-nested application of conj_op: [a, b, c] gives op(a, op(b, c)).

    Raises:
        EmptyList: exprs is empty
    """
    if not exprs:
        raise EmptyList(f"cannot flatten an empty list with {conj_op}")
    result = exprs[-1]
    for expr in reversed(exprs[:-1]):
        result = Expr(conj_op, expr, result)
    return result


def split_conjuncts(e: Expr, conj_op: str = "AND") -> List[Expr]:
    """Inverse of flatten over nested conj_op nodes."""
    if e.base == conj_op and e.right is not None:
        return split_conjuncts(e.left, conj_op) + split_conjuncts(e.right, conj_op)
    return [e]


def fresh(context: str) -> Expr:
    """Deterministic fresh variable for a context string."""
    return Expr.leaf(FRESH_PREFIX + context)


# --- serialization -----------------------------------------------------------

def serialize(e: Optional[Expr]) -> str:
    """Bracket syntax `["ADD",["x",nil,nil],["0x1",nil,nil]]`."""
    if e is None:
        return "nil"
    return f"[{json.dumps(e.base, ensure_ascii=False)},{serialize(e.left)},{serialize(e.right)}]"


def order_key(e: Expr) -> Tuple[int, bytes]:
    """Total order: smaller trees first, then bytewise canonical serialization."""
    return e.size, serialize(e).encode("utf-8")


def parse_expr(text: str) -> Expr:
    """Inverse of serialize; also accepts a bare leaf name."""
    text = text.strip()
    if not text.startswith("["):
        return Expr.leaf(text)
    try:
        data = json.loads(re.sub(r"\bnil\b", "null", text))
    except json.JSONDecodeError as e:
        raise MalformedExpr(f"cannot parse expression {text!r}: {e}") from e
    return _from_nested(data)


def _from_nested(data) -> Optional[Expr]:
    if data is None:
        return None
    if not isinstance(data, list) or len(data) != 3 or not isinstance(data[0], str):
        raise MalformedExpr(f"expression records have 3 fields, got {data!r}")
    return Expr(data[0], _from_nested(data[1]), _from_nested(data[2]))


# --- variable classification -------------------------------------------------

@dataclass
class VarClass:
    """Free/bound classification of query variables; unlisted variables are free."""
    bound: Set[str] = field(default_factory=set)

    def is_bound(self, name: str) -> bool:
        return name in self.bound

    def free_in(self, exprs: Iterable[Expr]) -> Set[str]:
        names: Set[str] = set()
        for e in exprs:
            names |= variables(e)
        return names - self.bound

    def bound_in(self, exprs: Iterable[Expr]) -> Set[str]:
        names: Set[str] = set()
        for e in exprs:
            names |= variables(e)
        return names & self.bound
