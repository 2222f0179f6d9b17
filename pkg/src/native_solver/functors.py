"""
Native solver functors for Symflow Project
This module provides the host functions solver.dl calls for folding, ordering and
checking candidate solutions.
"""

import logging
import threading
from typing import TYPE_CHECKING, Dict, Optional, Tuple

from ..engine.values import NIL, RecordRef, Value
from ..expr.codec import ExprCodec
from ..expr.concrete import DEFAULT_WIDTH, fold
from ..expr.expression import Expr, order_key, substitute
from ..expr.operators import OperatorTable

if TYPE_CHECKING:
    from ..engine.datalog_engine import DatalogEngine

logger = logging.getLogger(__name__)

# @solution_check results
CHECK_FALSE = 0
CHECK_TRUE = 1
CHECK_OPEN = 2


def power_of_two_exponent(value: int) -> Optional[int]:
    if value <= 0 or value & (value - 1):
        return None
    return value.bit_length() - 1


def check_solution(var: str, value: Expr, condition: Expr, width: int = DEFAULT_WIDTH,
                   table: Optional[OperatorTable] = None) -> int:
    """
    Substitute var := value into condition and fold.

    Returns:
        CHECK_TRUE when it folds to 0x1, CHECK_FALSE for any other constant,
        CHECK_OPEN when other variables keep it symbolic
    """
    folded = fold(substitute(condition, {var: value}), width, table)
    if not folded.is_constant:
        return CHECK_OPEN
    return CHECK_TRUE if folded.value == 1 else CHECK_FALSE


def register_native_functors(engine: "DatalogEngine", codec: ExprCodec,
                             table: Optional[OperatorTable] = None,
                             width: int = DEFAULT_WIDTH) -> ExprCodec:
    """
    Register @fold, @is_constant, @expr_less, @log2, @pow2, @solution_check
    and @substitute on an engine. @tree_size comes from register_expr_functors.
    """
    table = table or OperatorTable.default()
    keys: Dict[RecordRef, Tuple[int, bytes]] = {}
    lock = threading.RLock()

    def key_of(value: Value) -> Tuple[int, bytes]:
        hit = keys.get(value)
        if hit is None:
            hit = order_key(codec.decode(value))
            with lock:
                keys[value] = hit
        return hit

    def fold_functor(e: Value) -> Value:
        expr = codec.decode(e)
        folded = fold(expr, width, table)
        return e if folded is expr else codec.encode(folded)

    def is_constant_functor(e: Value) -> Value:
        return int(codec.decode(e).is_constant)

    def expr_less_functor(a: Value, b: Value) -> Value:
        return int(key_of(a) < key_of(b))

    def log2_functor(c: Value) -> Value:
        expr = codec.decode(c)
        if not expr.is_constant:
            return NIL
        exponent = power_of_two_exponent(expr.value)
        return NIL if exponent is None else codec.encode(Expr.const(exponent, width))

    def pow2_functor(k: Value) -> Value:
        expr = codec.decode(k)
        if not expr.is_constant or expr.value >= width:
            return NIL
        return codec.encode(Expr.const(1 << expr.value, width))

    def solution_check_functor(x: Value, s: Value, e: Value) -> Value:
        return check_solution(codec.decode(x).base, codec.decode(s), codec.decode(e), width, table)

    def substitute_functor(e: Value, x: Value, v: Value) -> Value:
        expr = codec.decode(e)
        replaced = substitute(expr, {codec.decode(x).base: codec.decode(v)})
        return e if replaced is expr else codec.encode(replaced)

    engine.register_functor("fold", 1, fold_functor)
    engine.register_functor("is_constant", 1, is_constant_functor)
    engine.register_functor("expr_less", 2, expr_less_functor)
    engine.register_functor("log2", 1, log2_functor)
    engine.register_functor("pow2", 1, pow2_functor)
    engine.register_functor("solution_check", 3, solution_check_functor)
    engine.register_functor("substitute", 3, substitute_functor)
    logger.debug(f"Registered native solver functors at width {width}")
    return codec
