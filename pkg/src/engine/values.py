"""
Values module for Symflow Project
This module defines Datalog values and the interning tables behind symbols and records.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from .errors import MalformedList, UnknownOrdinal, UnknownRecordRef

logger = logging.getLogger(__name__)

U64_MASK = (1 << 64) - 1


@dataclass(frozen=True, slots=True)
class Symbol:
    """Interned string, identified by its ordinal."""
    ordinal: int

    def __repr__(self) -> str:
        return f"Symbol({self.ordinal})"


@dataclass(frozen=True, slots=True)
class RecordRef:
    """Interned record, identified by its ordinal."""
    ordinal: int

    def __repr__(self) -> str:
        return f"RecordRef({self.ordinal})"


class Nil:
    """The empty record. Use the NIL singleton."""

    _instance = None
    __slots__ = ()

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "nil"

    def __reduce__(self):
        return (Nil, ())


NIL = Nil()

# Numbers are plain ints in [0, 2**64).
Value = Union[int, Symbol, RecordRef, Nil]


def is_number(value: Value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class SymbolTable:
    """
    Bijection between strings and symbol ordinals.

    Interning is canonical and thread-safe: the same string always maps to the
    same ordinal within one table.
    """

    def __init__(self):
        self._ordinals: Dict[str, Symbol] = {}
        self._strings: List[str] = []
        self.lock = threading.RLock()

    def intern(self, text: str) -> Symbol:
        symbol = self._ordinals.get(text)
        if symbol is not None:
            return symbol
        with self.lock:
            symbol = self._ordinals.get(text)
            if symbol is None:
                symbol = Symbol(len(self._strings))
                self._strings.append(text)
                self._ordinals[text] = symbol
            return symbol

    def resolve(self, symbol: Symbol) -> str:
        if not isinstance(symbol, Symbol) or not 0 <= symbol.ordinal < len(self._strings):
            raise UnknownOrdinal(f"symbol ordinal {symbol!r} was never issued")
        return self._strings[symbol.ordinal]

    def __len__(self) -> int:
        return len(self._strings)


class RecordTable:
    """
    Bijection between field tuples and record references.

    pack is injective on distinct tuples and idempotent on equal ones; the empty
    tuple packs to NIL.
    """

    def __init__(self):
        self._refs: Dict[Tuple[Value, ...], RecordRef] = {}
        self._fields: List[Tuple[Value, ...]] = []
        self.lock = threading.RLock()

    def pack(self, fields: Sequence[Value]) -> Union[RecordRef, Nil]:
        key = tuple(fields)
        if not key:
            return NIL
        ref = self._refs.get(key)
        if ref is not None:
            return ref
        with self.lock:
            ref = self._refs.get(key)
            if ref is None:
                ref = RecordRef(len(self._fields))
                self._fields.append(key)
                self._refs[key] = ref
            return ref

    def unpack(self, ref: Union[RecordRef, Nil]) -> Tuple[Value, ...]:
        if ref is NIL:
            return ()
        if not isinstance(ref, RecordRef) or not 0 <= ref.ordinal < len(self._fields):
            raise UnknownRecordRef(f"record reference {ref!r} was never issued")
        return self._fields[ref.ordinal]

    def pack_list(self, items: Iterable[Value]) -> Union[RecordRef, Nil]:
        """Build a cons list `[a, [b, [c, nil]]]` from a Python iterable."""
        result: Value = NIL
        for item in reversed(list(items)):
            result = self.pack((item, result))
        return result

    def unpack_list(self, value: Value) -> List[Value]:
        """Inverse of pack_list; raises MalformedList on anything else."""
        items: List[Value] = []
        while value is not NIL:
            if not isinstance(value, RecordRef):
                raise MalformedList(f"list cell expected, found {value!r}")
            cell = self.unpack(value)
            if len(cell) != 2:
                raise MalformedList(f"list cell must have 2 fields, found {len(cell)}")
            items.append(cell[0])
            value = cell[1]
        return items

    def list_length(self, value: Value) -> int:
        return len(self.unpack_list(value))

    def __len__(self) -> int:
        return len(self._fields)
