"""
Program module for Symflow Project
This module defines the parsed representation of Datalog programs.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, Optional, Set, Tuple, Union

from .errors import SourceLocation


# --- terms -----------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Wildcard:
    def __str__(self) -> str:
        return "_"


@dataclass(frozen=True)
class SymbolConst:
    text: str

    def __str__(self) -> str:
        escaped = self.text.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


@dataclass(frozen=True)
class NumberConst:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class NilConst:
    def __str__(self) -> str:
        return "nil"


@dataclass(frozen=True)
class RecordTerm:
    fields: Tuple["Term", ...]

    def __str__(self) -> str:
        return "[" + ", ".join(str(f) for f in self.fields) + "]"


@dataclass(frozen=True)
class FunctorCall:
    name: str
    args: Tuple["Term", ...]

    def __str__(self) -> str:
        return f"@{self.name}(" + ", ".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Arithmetic:
    op: str
    left: "Term"
    right: "Term"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


Term = Union[Var, Wildcard, SymbolConst, NumberConst, NilConst, RecordTerm, FunctorCall, Arithmetic]


def term_variables(term: Term) -> Iterator[str]:
    """Yield the variable names occurring in a term, left to right."""
    if isinstance(term, Var):
        yield term.name
    elif isinstance(term, RecordTerm):
        for sub in term.fields:
            yield from term_variables(sub)
    elif isinstance(term, FunctorCall):
        for sub in term.args:
            yield from term_variables(sub)
    elif isinstance(term, Arithmetic):
        yield from term_variables(term.left)
        yield from term_variables(term.right)


def term_functors(term: Term) -> Iterator[FunctorCall]:
    if isinstance(term, FunctorCall):
        yield term
        for sub in term.args:
            yield from term_functors(sub)
    elif isinstance(term, RecordTerm):
        for sub in term.fields:
            yield from term_functors(sub)
    elif isinstance(term, Arithmetic):
        yield from term_functors(term.left)
        yield from term_functors(term.right)


def is_pattern(term: Term) -> bool:
    """True if the term can be matched against a value (no functor, no arithmetic)."""
    if isinstance(term, (FunctorCall, Arithmetic)):
        return False
    if isinstance(term, RecordTerm):
        return all(is_pattern(sub) for sub in term.fields)
    return True


# --- literals and rules ----------------------------------------------------

@dataclass(frozen=True)
class Atom:
    relation: str
    terms: Tuple[Term, ...]
    negated: bool = False
    location: Optional[SourceLocation] = field(default=None, compare=False)

    def variables(self) -> Set[str]:
        return {name for term in self.terms for name in term_variables(term)}

    def __str__(self) -> str:
        text = f"{self.relation}(" + ", ".join(str(t) for t in self.terms) + ")"
        return "!" + text if self.negated else text


class ComparisonOp(Enum):
    """Comparison operators usable as body constraints"""
    EQ = "="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="


@dataclass(frozen=True)
class Comparison:
    op: ComparisonOp
    left: Term
    right: Term
    location: Optional[SourceLocation] = field(default=None, compare=False)

    def variables(self) -> Set[str]:
        return set(term_variables(self.left)) | set(term_variables(self.right))

    def __str__(self) -> str:
        return f"{self.left} {self.op.value} {self.right}"


Literal = Union[Atom, Comparison]


@dataclass(frozen=True)
class Rule:
    """A rule with one or more heads; a rule with an empty body is a fact."""
    heads: Tuple[Atom, ...]
    body: Tuple[Literal, ...]
    location: Optional[SourceLocation] = field(default=None, compare=False)

    @property
    def is_fact(self) -> bool:
        return not self.body

    def positive_atoms(self) -> List[Atom]:
        return [lit for lit in self.body if isinstance(lit, Atom) and not lit.negated]

    def negative_atoms(self) -> List[Atom]:
        return [lit for lit in self.body if isinstance(lit, Atom) and lit.negated]

    def functor_calls(self) -> Iterator[FunctorCall]:
        for atom in self.heads:
            for term in atom.terms:
                yield from term_functors(term)
        for lit in self.body:
            terms = lit.terms if isinstance(lit, Atom) else (lit.left, lit.right)
            for term in terms:
                yield from term_functors(term)

    def __str__(self) -> str:
        heads = ", ".join(str(h) for h in self.heads)
        if not self.body:
            return heads + "."
        return heads + " :- " + ", ".join(str(b) for b in self.body) + "."


# --- declarations ----------------------------------------------------------

PRIMITIVE_TYPES = frozenset({"symbol", "number"})


@dataclass(frozen=True)
class Column:
    name: str
    type_name: str


@dataclass(frozen=True)
class RelationDecl:
    name: str
    columns: Tuple[Column, ...]
    location: Optional[SourceLocation] = field(default=None, compare=False)

    @property
    def arity(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class RecordType:
    name: str
    fields: Tuple[Column, ...]


@dataclass
class ComponentTemplate:
    """Body of a `.comp` block, kept as raw items until instantiated."""
    name: str
    declarations: List[RelationDecl] = field(default_factory=list)
    rules: List[Rule] = field(default_factory=list)
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)


@dataclass
class Program:
    """
    A parsed Datalog program after component expansion.

    Attributes:
        relations: declared relations by (possibly qualified) name
        types: record types by name
        rules: all rules and inline facts
        inputs: relations loaded from `<Rel>.facts`
        outputs: relations dumped to `<Rel>.csv`
        components: component templates by name
        instances: (template name, count) pairs in `.init` order
    """
    relations: Dict[str, RelationDecl] = field(default_factory=dict)
    types: Dict[str, RecordType] = field(default_factory=dict)
    rules: List[Rule] = field(default_factory=list)
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    components: Dict[str, ComponentTemplate] = field(default_factory=dict)
    instances: List[Tuple[str, int]] = field(default_factory=list)

    @property
    def idb_relations(self) -> FrozenSet[str]:
        return frozenset(head.relation for rule in self.rules for head in rule.heads)

    @property
    def edb_relations(self) -> FrozenSet[str]:
        return frozenset(self.relations) - self.idb_relations

    def arity(self, relation: str) -> int:
        return self.relations[relation].arity

    def column_types(self, relation: str) -> Tuple[str, ...]:
        return tuple(col.type_name for col in self.relations[relation].columns)
