"""
Fact I/O module for Symflow Project
This module reads `<Relation>.facts` files and writes `<Relation>.csv` dumps.

Both formats are tab-separated with one row per line and no header. Numbers are
decimal, symbols verbatim, records in bracket syntax such as
`["ADD",["x",nil,nil],["0x01",nil,nil]]`.
"""

import json
import logging
import re
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from .errors import ArityError, FactIOError, FactTypeError
from .program import PRIMITIVE_TYPES, Program
from .relation import FactDB, Row
from .values import NIL, U64_MASK, RecordRef, RecordTable, Symbol, SymbolTable, Value

logger = logging.getLogger(__name__)

_RECORD_TOKEN_RE = re.compile(r'\s*(?:(?P<open>\[)|(?P<close>\])|(?P<comma>,)|(?P<string>"(?:[^"\\]|\\.)*")'
                              r'|(?P<nil>nil\b)|(?P<number>\d+))')


def column_kind(program: Program, type_name: str) -> str:
    """'symbol', 'number' or 'record' for a declared column type."""
    if type_name in PRIMITIVE_TYPES:
        return type_name
    record_type = program.types.get(type_name)
    if record_type is not None and len(record_type.fields) == 1 and record_type.fields[0].name == "":
        return record_type.fields[0].type_name
    return "record"


def render_value(value: Value, symbols: SymbolTable, records: RecordTable, nested: bool = False) -> str:
    """Render one value for a CSV cell; symbols are quoted only inside records."""
    if isinstance(value, Symbol):
        text = symbols.resolve(value)
        if nested:
            return json.dumps(text, ensure_ascii=False)
        if "\t" in text or (text and text.splitlines() != [text]):
            raise FactTypeError(f"symbol {text!r} contains a tab or line break and cannot be written as a cell")
        return text
    if value is NIL:
        return "nil"
    if isinstance(value, RecordRef):
        inner = ",".join(render_value(v, symbols, records, nested=True) for v in records.unpack(value))
        return f"[{inner}]"
    return str(value)


def parse_record(text: str, symbols: SymbolTable, records: RecordTable) -> Value:
    """Parse bracket syntax into a record value."""
    position = 0

    def next_token():
        nonlocal position
        match = _RECORD_TOKEN_RE.match(text, position)
        if match is None:
            raise FactTypeError(f"malformed record near {text[position:position + 20]!r}")
        position = match.end()
        return match.lastgroup, match.group(match.lastgroup)

    def parse_item(kind, token) -> Value:
        if kind == "open":
            fields: List[Value] = []
            kind, token = next_token()
            if kind == "close":
                return NIL
            while True:
                fields.append(parse_item(kind, token))
                kind, token = next_token()
                if kind == "close":
                    return records.pack(fields)
                if kind != "comma":
                    raise FactTypeError(f"expected ',' or ']' in record {text!r}")
                kind, token = next_token()
        if kind == "string":
            return symbols.intern(json.loads(token))
        if kind == "nil":
            return NIL
        if kind == "number":
            return _number(token)
        raise FactTypeError(f"unexpected {token!r} in record {text!r}")

    value = parse_item(*next_token())
    if text[position:].strip():
        raise FactTypeError(f"trailing text after record {text!r}")
    return value


def _number(token: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise FactTypeError(f"non-numeric token {token!r} in number column") from None
    if not 0 <= value <= U64_MASK:
        raise FactTypeError(f"number {value} is outside the unsigned 64-bit range")
    return value


def _record_symbols(value: Value, records: RecordTable) -> Iterable[Value]:
    if isinstance(value, RecordRef):
        for field_value in records.unpack(value):
            yield from _record_symbols(field_value, records)
    elif isinstance(value, Symbol):
        yield value


def parse_cell(token: str, kind: str, arity: int, symbols: SymbolTable, records: RecordTable) -> Value:
    if kind == "number":
        return _number(token)
    if kind == "symbol":
        return symbols.intern(token)
    if token.startswith("[") or token == "nil":
        return parse_record(token, symbols, records)
    # bare token in a record column: leaf record with nil children
    return records.pack([symbols.intern(token)] + [NIL] * (arity - 1))


def load_facts(directory: Path, program: Program, db: FactDB,
               reserved_prefixes: Sequence[str] = ()) -> FactDB:
    """
    Load one `<Relation>.facts` file per input relation into db.

    Args:
        directory: directory holding the fact files
        program: program whose `.input` directives and declarations drive loading
        db: fact database to populate
        reserved_prefixes: symbol prefixes no fact may use

    Returns:
        The populated fact database

    Raises:
        FactIOError: directory missing or a file unreadable
        FactTypeError: a token does not fit its column type
        ArityError: a row has the wrong number of columns
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FactIOError(f"fact directory {directory} does not exist")

    for name in program.inputs:
        decl = program.relations[name]
        relation = db.declare(name, decl.arity)
        kinds = [column_kind(program, col.type_name) for col in decl.columns]
        field_counts = [len(program.types[col.type_name].fields) if kind == "record" else 0
                        for kind, col in zip(kinds, decl.columns)]
        path = directory / f"{name}.facts"
        if not path.exists():
            logger.warning(f"No fact file for input relation {name} at {path}; treating it as empty")
            continue
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise FactIOError(f"cannot read {path}: {e}") from e

        rows: List[Row] = []
        for line_number, line in enumerate(lines, start=1):
            if not line:
                continue
            tokens = line.split("\t")
            if len(tokens) != decl.arity:
                raise ArityError(f"{path}:{line_number}: expected {decl.arity} columns, found {len(tokens)}")
            try:
                row = tuple(parse_cell(token, kind, count, db.symbols, db.records)
                            for token, kind, count in zip(tokens, kinds, field_counts))
            except FactTypeError as e:
                raise FactTypeError(f"{path}:{line_number}: {e.message}") from e
            for prefix in reserved_prefixes:
                for value in row:
                    for symbol in _record_symbols(value, db.records):
                        if db.symbols.resolve(symbol).startswith(prefix):
                            raise FactTypeError(f"{path}:{line_number}: symbol uses reserved prefix {prefix!r}")
            rows.append(row)
        relation.insert(rows)
        logger.debug(f"Loaded {len(rows)} rows into {name} from {path}")
    return db


def render_rows(db: FactDB, name: str) -> List[str]:
    """Rows of one relation rendered as TSV lines, sorted bytewise."""
    lines = ["\t".join(render_value(v, db.symbols, db.records) for v in row)
             for row in db.rows(name)]
    if "" in lines:
        raise FactTypeError(f"{name}: a single empty symbol renders as a blank line, which reads back as no row")
    lines.sort(key=lambda line: line.encode("utf-8"))
    return lines


def dump_relations(db: FactDB, directory: Path, program: Program,
                   relations: Optional[Iterable[str]] = None) -> List[Path]:
    """
    Write each output relation (or the given relations) as `<Relation>.csv`.

    Returns:
        Paths of the files written
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FactIOError(f"cannot create output directory {directory}: {e}") from e

    written: List[Path] = []
    for name in (program.outputs if relations is None else relations):
        path = directory / f"{name}.csv"
        lines = render_rows(db, name)
        try:
            path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        except OSError as e:
            raise FactIOError(f"cannot write {path}: {e}") from e
        written.append(path)
        logger.debug(f"Wrote {len(lines)} rows to {path}")
    return written
