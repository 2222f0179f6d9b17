"""
Relation module for Symflow Project
This module provides set-semantics tuple storage with lazily built hash indexes.
"""

import logging
import threading
from collections import defaultdict
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple

from .errors import ArityError, UnknownPredicate
from .values import NIL, RecordRef, RecordTable, Symbol, SymbolTable, Value, is_number

logger = logging.getLogger(__name__)

Row = Tuple[Value, ...]


class Relation:
    """A set of equal-arity tuples plus per-column-set hash indexes."""

    def __init__(self, name: str, arity: int, rows: Iterable[Row] = ()):
        self.name = name
        self.arity = arity
        self.rows: Set[Row] = set()
        self._indexes: Dict[Tuple[int, ...], Dict[Row, List[Row]]] = {}
        self._lock = threading.RLock()
        self.insert(rows)

    def insert(self, rows: Iterable[Row]) -> Set[Row]:
        """Insert rows and return the subset that was not present before."""
        rows = list(rows)
        for row in rows:
            if len(row) != self.arity:
                raise ArityError(f"{self.name} expects {self.arity} columns, got {len(row)}")
        added: Set[Row] = set()
        with self._lock:
            for row in rows:
                if row not in self.rows:
                    self.rows.add(row)
                    added.add(row)
            if added:
                for columns, index in self._indexes.items():
                    for row in added:
                        index[tuple(row[c] for c in columns)].append(row)
        return added

    def index(self, columns: Tuple[int, ...]) -> Dict[Row, List[Row]]:
        index = self._indexes.get(columns)
        if index is not None:
            return index
        with self._lock:
            index = self._indexes.get(columns)
            if index is None:
                index = defaultdict(list)
                for row in self.rows:
                    index[tuple(row[c] for c in columns)].append(row)
                self._indexes[columns] = index
            return index

    def lookup(self, columns: Tuple[int, ...], key: Row) -> List[Row]:
        if not columns:
            return list(self.rows)
        return self.index(columns).get(key, [])

    def contains_matching(self, columns: Tuple[int, ...], key: Row) -> bool:
        if len(columns) == self.arity:
            ordered = [None] * self.arity
            for column, value in zip(columns, key):
                ordered[column] = value
            return tuple(ordered) in self.rows
        if not columns:
            return bool(self.rows)
        return bool(self.index(columns).get(key))

    def __contains__(self, row: Row) -> bool:
        return row in self.rows

    def __iter__(self) -> Iterator[Row]:
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __repr__(self) -> str:
        return f"Relation({self.name}/{self.arity}, {len(self.rows)} rows)"


def decode_value(value: Value, symbols: SymbolTable, records: RecordTable) -> Any:
    """Turn an engine value into plain Python: str, int, None (nil) or tuple."""
    if isinstance(value, Symbol):
        return symbols.resolve(value)
    if value is NIL:
        return None
    if isinstance(value, RecordRef):
        return tuple(decode_value(v, symbols, records) for v in records.unpack(value))
    return value


def encode_value(value: Any, symbols: SymbolTable, records: RecordTable) -> Value:
    """Inverse of decode_value."""
    if value is None:
        return NIL
    if isinstance(value, str):
        return symbols.intern(value)
    if isinstance(value, (tuple, list)):
        return records.pack([encode_value(v, symbols, records) for v in value])
    if is_number(value):
        if not 0 <= value < 1 << 64:
            raise ValueError(f"number {value} is outside the unsigned 64-bit range")
        return value
    raise ValueError(f"cannot encode {value!r} as a Datalog value")


class FactDB:
    """
    Map from relation name to Relation, bound to the interning tables that give
    its symbols and records meaning.
    """

    def __init__(self, symbols: SymbolTable, records: RecordTable,
                 arities: Optional[Dict[str, int]] = None):
        self.symbols = symbols
        self.records = records
        self.relations: Dict[str, Relation] = {}
        for name, arity in (arities or {}).items():
            self.relations[name] = Relation(name, arity)

    def declare(self, name: str, arity: int) -> Relation:
        relation = self.relations.get(name)
        if relation is None:
            relation = Relation(name, arity)
            self.relations[name] = relation
        elif relation.arity != arity:
            raise ArityError(f"{name} already has arity {relation.arity}, not {arity}")
        return relation

    def relation(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise UnknownPredicate(f"relation {name} is not in the fact database") from None

    def rows(self, name: str) -> FrozenSet[Row]:
        relation = self.relations.get(name)
        return frozenset(relation.rows) if relation is not None else frozenset()

    def add_python(self, name: str, rows: Iterable[Tuple[Any, ...]]) -> Set[Row]:
        """Insert rows given as plain Python values (str, int, None, tuples)."""
        encoded = [tuple(encode_value(v, self.symbols, self.records) for v in row) for row in rows]
        if name not in self.relations:
            if not encoded:
                raise UnknownPredicate(f"relation {name} is not declared and no rows fix its arity")
            self.declare(name, len(encoded[0]))
        return self.relations[name].insert(encoded)

    def to_python(self, names: Optional[Iterable[str]] = None) -> Dict[str, Set[Tuple[Any, ...]]]:
        """Decoded snapshot, comparable across engine instances."""
        selected = self.relations if names is None else {n: self.relation(n) for n in names}
        return {
            name: {tuple(decode_value(v, self.symbols, self.records) for v in row) for row in rel.rows}
            for name, rel in selected.items()
        }

    def copy(self) -> "FactDB":
        clone = FactDB(self.symbols, self.records)
        for name, relation in self.relations.items():
            clone.relations[name] = Relation(name, relation.arity, relation.rows)
        return clone

    def total_rows(self) -> int:
        return sum(len(rel) for rel in self.relations.values())

    def __contains__(self, name: str) -> bool:
        return name in self.relations

    def __repr__(self) -> str:
        return f"FactDB({len(self.relations)} relations, {self.total_rows()} rows)"
