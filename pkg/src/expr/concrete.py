"""
Concrete evaluation module for Symflow Project
This module evaluates expressions under modular 2**width semantics; it is the oracle
the solver tests compare against, and the constant folder of the native solver.
"""

from typing import Callable, Dict, Mapping, Optional

from .errors import UnboundVariable, UnknownOperator
from .expression import Expr, canonical_constant
from .operators import OperatorTable

DEFAULT_WIDTH = 256


def _signed(value: int, width: int) -> int:
    return value - (1 << width) if value >> (width - 1) else value


def _exp(base: int, exponent: int, mask: int) -> int:
    # Square-and-multiply modulo 2**width.
    return pow(base, exponent, mask + 1)


_BINARY: Dict[str, Callable[[int, int, int, int], int]] = {
    "ADD": lambda a, b, w, m: (a + b) & m,
    "SUB": lambda a, b, w, m: (a - b) & m,
    "MUL": lambda a, b, w, m: (a * b) & m,
    "DIV": lambda a, b, w, m: 0 if b == 0 else a // b,
    "MOD": lambda a, b, w, m: 0 if b == 0 else a % b,
    "EXP": lambda a, b, w, m: _exp(a, b, m),
    "SHL": lambda a, b, w, m: 0 if b >= w else (a << b) & m,
    "SHR": lambda a, b, w, m: 0 if b >= w else a >> b,
    "AND": lambda a, b, w, m: a & b,
    "OR": lambda a, b, w, m: a | b,
    "XOR": lambda a, b, w, m: a ^ b,
    "EQ": lambda a, b, w, m: int(a == b),
    "LT": lambda a, b, w, m: int(a < b),
    "GT": lambda a, b, w, m: int(a > b),
    "SLT": lambda a, b, w, m: int(_signed(a, w) < _signed(b, w)),
}

_UNARY: Dict[str, Callable[[int, int, int], int]] = {
    "NOT": lambda a, w, m: a ^ m,
    "ISZERO": lambda a, w, m: int(a == 0),
}

_default_table: Optional[OperatorTable] = None


def _table(table: Optional[OperatorTable]) -> OperatorTable:
    global _default_table
    if table is not None:
        return table
    if _default_table is None:
        _default_table = OperatorTable.default()
    return _default_table


def apply_operator(op: str, args, width: int = DEFAULT_WIDTH,
                   table: Optional[OperatorTable] = None) -> int:
    """
    Apply a canonical or aliased operator to integer arguments.

    Raises:
        UnknownOperator: op is not in the table or has no concrete semantics
    """
    name = _table(table).canonical(op)
    mask = (1 << width) - 1
    values = [int(a) & mask for a in args]
    if len(values) == 2 and name in _BINARY:
        return _BINARY[name](values[0], values[1], width, mask)
    if len(values) == 1 and name in _UNARY:
        return _UNARY[name](values[0], width, mask)
    raise UnknownOperator(f"{op} cannot be applied to {len(values)} argument(s)")


def eval_concrete(e: Expr, env: Mapping[str, int], width: int = DEFAULT_WIDTH,
                  table: Optional[OperatorTable] = None) -> int:
    """
    Value of e with every variable taken from env.

    Args:
        e: expression to evaluate
        env: variable name to integer; values are reduced modulo 2**width
        width: bit-width of the semantics
        table: operator table used for alias resolution

    Returns:
        The value in [0, 2**width); comparisons yield 0 or 1

    Raises:
        UnboundVariable: a variable of e is missing from env
        UnknownOperator: an inner node names no known operator
    """
    mask = (1 << width) - 1
    cache: Dict[Expr, int] = {}

    def walk(node: Expr) -> int:
        hit = cache.get(node)
        if hit is not None:
            return hit
        if node.is_constant:
            value = node.value & mask
        elif node.is_leaf:
            if node.base not in env:
                raise UnboundVariable(f"no value for variable {node.base!r}")
            value = int(env[node.base]) & mask
        else:
            args = [walk(child) for child in node.children()]
            value = apply_operator(node.base, args, width, table)
        cache[node] = value
        return value

    return walk(e)


def fold(e: Expr, width: int = DEFAULT_WIDTH, table: Optional[OperatorTable] = None) -> Expr:
    """Replace every operator node whose children are all constants by its value."""
    if e.is_leaf:
        return e
    children = [fold(child, width, table) for child in e.children()]
    if all(child.is_constant for child in children):
        try:
            value = apply_operator(e.base, [c.value for c in children], width, table)
        except UnknownOperator:
            pass
        else:
            return Expr(canonical_constant(value, width))
    left = children[0]
    right = children[1] if len(children) > 1 else None
    if left is e.left and right is e.right:
        return e
    return Expr(e.base, left, right)
