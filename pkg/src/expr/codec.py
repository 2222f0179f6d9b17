"""
Codec module for Symflow Project
This module converts expressions, expression lists and models to and from engine records.
"""

import logging
import threading
from typing import TYPE_CHECKING, Dict, Iterable, List, Mapping, Tuple

from ..engine.values import NIL, RecordRef, RecordTable, Symbol, SymbolTable, Value
from .errors import MalformedExpr
from .expression import Expr, flatten, fresh

if TYPE_CHECKING:
    from ..engine.datalog_engine import DatalogEngine

logger = logging.getLogger(__name__)


class ExprCodec:
    """
    Expr <-> `[base, left, right]` records of one engine instance.

    Both directions are memoized; records are immutable once issued, so the
    memo never goes stale.
    """

    def __init__(self, symbols: SymbolTable, records: RecordTable):
        self.symbols = symbols
        self.records = records
        self._decoded: Dict[RecordRef, Expr] = {}
        self._encoded: Dict[Expr, RecordRef] = {}
        self.lock = threading.RLock()

    @classmethod
    def for_engine(cls, engine: "DatalogEngine") -> "ExprCodec":
        return cls(engine.symbols, engine.records)

    # expressions

    def encode(self, e: Expr) -> RecordRef:
        hit = self._encoded.get(e)
        if hit is not None:
            return hit
        left = self.encode(e.left) if e.left is not None else NIL
        right = self.encode(e.right) if e.right is not None else NIL
        ref = self.records.pack((self.symbols.intern(e.base), left, right))
        with self.lock:
            self._encoded[e] = ref
        return ref

    def decode(self, value: Value) -> Expr:
        """
        Raises:
            MalformedExpr: value is not a 3-field record with a symbol base
        """
        hit = self._decoded.get(value) if isinstance(value, RecordRef) else None
        if hit is not None:
            return hit
        if not isinstance(value, RecordRef):
            raise MalformedExpr(f"expression record expected, found {value!r}")
        fields = self.records.unpack(value)
        if len(fields) != 3 or not isinstance(fields[0], Symbol):
            raise MalformedExpr(f"expression records have a symbol base and 2 children, found {fields!r}")
        base, left, right = fields
        e = Expr(
            self.symbols.resolve(base),
            None if left is NIL else self.decode(left),
            None if right is NIL else self.decode(right),
        )
        with self.lock:
            self._decoded[value] = e
        return e

    # lists

    def encode_list(self, exprs: Iterable[Expr]) -> Value:
        return self.records.pack_list([self.encode(e) for e in exprs])

    def decode_list(self, value: Value) -> List[Expr]:
        return [self.decode(item) for item in self.records.unpack_list(value)]

    # models: [[var, value], rest]

    def encode_model(self, model: Mapping[str, str]) -> Value:
        cells = [self.records.pack((self.symbols.intern(var), self.symbols.intern(model[var])))
                 for var in sorted(model)]
        return self.records.pack_list(cells)

    def decode_model(self, value: Value) -> Dict[str, str]:
        model: Dict[str, str] = {}
        for cell in self.records.unpack_list(value):
            fields = self.records.unpack(cell)
            if len(fields) != 2:
                raise MalformedExpr(f"model entries are [var, value] pairs, found {fields!r}")
            model[self.symbols.resolve(fields[0])] = self.symbols.resolve(fields[1])
        return model

    def encode_result(self, status: str, model: Mapping[str, str] = None) -> Value:
        """`[status, model-list]`; the model list is nil unless there is a model."""
        return self.records.pack((self.symbols.intern(status), self.encode_model(model or {})))

    def decode_result(self, value: Value) -> Tuple[str, Dict[str, str]]:
        fields = self.records.unpack(value)
        if not fields:
            raise MalformedExpr("empty solver result record")
        status = self.symbols.resolve(fields[0])
        model = self.decode_model(fields[1]) if len(fields) > 1 else {}
        return status, model


def register_expr_functors(engine: "DatalogEngine", codec: ExprCodec = None) -> ExprCodec:
    """
    Register @fresh, @flatten and @tree_size on an engine.

    Returns:
        The codec bound to the engine, for use by further functor groups
    """
    codec = codec or ExprCodec.for_engine(engine)

    def fresh_functor(context: Value) -> Value:
        return codec.encode(fresh(engine.resolve_symbol(context)))

    def flatten_functor(conj_op: Value, exprs: Value) -> Value:
        return codec.encode(flatten(engine.resolve_symbol(conj_op), codec.decode_list(exprs)))

    def tree_size_functor(e: Value) -> Value:
        return codec.decode(e).size

    engine.register_functor("fresh", 1, fresh_functor)
    engine.register_functor("flatten", 2, flatten_functor)
    engine.register_functor("tree_size", 1, tree_size_functor)
    logger.debug("Registered expression functors")
    return codec
