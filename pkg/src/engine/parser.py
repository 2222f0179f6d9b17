"""
Parser module for Symflow Project
This module turns Datalog dialect text into a checked Program.

The dialect follows the surface syntax of the Soufflé family:

    .type Expr = [base: symbol, left: Expr, right: Expr]
    .decl Edge(x: number, y: number)
    .input Edge
    .output Path
    Path(x, y) :- Edge(x, y).
    Path(x, z) :- Path(x, y), Edge(y, z), x != z.

Component templates are declared with `.comp Name { ... }` and expanded with
`.init Name[n]` into instances `Name_1` .. `Name_n`.
"""

import logging
import re
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Set, Tuple

from .errors import (
    ArityError,
    DatalogSyntaxError,
    SafetyError,
    SourceLocation,
    UnknownPredicate,
)
from .program import (
    PRIMITIVE_TYPES,
    Arithmetic,
    Atom,
    Column,
    Comparison,
    ComparisonOp,
    ComponentTemplate,
    FunctorCall,
    Literal,
    NilConst,
    NumberConst,
    Program,
    RecordTerm,
    RecordType,
    RelationDecl,
    Rule,
    SymbolConst,
    Term,
    Var,
    Wildcard,
    is_pattern,
    term_functors,
    term_variables,
)

logger = logging.getLogger(__name__)

_NAME_PART = r"[A-Za-z_](?:[A-Za-z0-9_]|\{k(?:-1)?\})*"
_TOKEN_SPEC = [
    ("COMMENT", r"//[^\n]*|/\*.*?\*/"),
    ("WS", r"[ \t\r\n]+"),
    ("DIRECTIVE", r"\.(?:decl|type|input|output|comp|init)\b"),
    ("STRING", r'"(?:[^"\\\n]|\\.)*"'),
    ("NUMBER", r"\d+"),
    ("NAME", _NAME_PART + r"(?:\." + _NAME_PART + r")*"),
    ("OP", r":-|<:|!=|<=|>=|[()\[\]{},.:<>=!+\-*/%@]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{rx})" for name, rx in _TOKEN_SPEC), re.DOTALL)
_PLACEHOLDER_RE = re.compile(r"\{k(-1)?\}")

_COMPARISONS = {op.value: op for op in ComparisonOp}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    location: SourceLocation


def tokenize(source: str) -> List[Token]:
    """Split dialect text into tokens, dropping whitespace and comments."""
    tokens: List[Token] = []
    position = 0
    line, line_start = 1, 0
    while position < len(source):
        match = _TOKEN_RE.match(source, position)
        if match is None:
            location = SourceLocation(line, position - line_start + 1)
            raise DatalogSyntaxError(f"unexpected character {source[position]!r}", location)
        kind = match.lastgroup
        text = match.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append(Token(kind, text, SourceLocation(line, position - line_start + 1)))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = position + text.rfind("\n") + 1
        position = match.end()
    tokens.append(Token("EOF", "", SourceLocation(line, position - line_start + 1)))
    return tokens


class _Parser:
    """Recursive-descent parser over the token list."""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    # token helpers

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def accept(self, text: str) -> bool:
        if self.current.kind in ("OP", "DIRECTIVE") and self.current.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        token = self.current
        if token.kind in ("OP", "DIRECTIVE") and token.text == text:
            self.pos += 1
            return token
        raise DatalogSyntaxError(f"expected {text!r}, found {token.text or 'end of input'!r}",
                                 token.location)

    def expect_name(self) -> Token:
        token = self.current
        if token.kind != "NAME":
            raise DatalogSyntaxError(f"expected a name, found {token.text or 'end of input'!r}",
                                     token.location)
        self.pos += 1
        return token

    # top level

    def parse_items(self, program: Program, template: Optional[ComponentTemplate],
                    closing: Optional[str] = None):
        while True:
            token = self.current
            if token.kind == "EOF":
                if closing is not None:
                    raise DatalogSyntaxError(f"missing {closing!r}", token.location)
                return
            if closing is not None and token.kind == "OP" and token.text == closing:
                self.advance()
                return
            if token.kind == "DIRECTIVE":
                self.parse_directive(program, template)
            else:
                rule = self.parse_rule()
                (template.rules if template else program.rules).append(rule)

    def parse_directive(self, program: Program, template: Optional[ComponentTemplate]):
        token = self.advance()
        directive = token.text
        if directive == ".decl":
            decl = self.parse_decl(token.location)
            (template.declarations if template else _DeclSink(program)).append(decl)
        elif directive == ".type":
            self.parse_type(program)
        elif directive in (".input", ".output"):
            names = [self.expect_name().text]
            while self.accept(","):
                names.append(self.expect_name().text)
            if template is not None:
                target = template.inputs if directive == ".input" else template.outputs
            else:
                target = program.inputs if directive == ".input" else program.outputs
            target.extend(name for name in names if name not in target)
        elif directive == ".comp":
            if template is not None:
                raise DatalogSyntaxError("components cannot be nested", token.location)
            name = self.expect_name().text
            if name in program.components:
                raise DatalogSyntaxError(f"component {name} declared twice", token.location)
            self.expect("{")
            component = ComponentTemplate(name=name)
            self.parse_items(program, component, closing="}")
            program.components[name] = component
        elif directive == ".init":
            if template is not None:
                raise DatalogSyntaxError(".init is not allowed inside a component", token.location)
            name = self.expect_name().text
            self.expect("[")
            count = self.current
            if count.kind != "NUMBER":
                raise DatalogSyntaxError("instantiation count must be a number", count.location)
            self.advance()
            self.expect("]")
            program.instances.append((name, int(count.text)))

    def parse_decl(self, location: SourceLocation) -> RelationDecl:
        name = self.expect_name().text
        self.expect("(")
        columns: List[Column] = []
        if not self.accept(")"):
            while True:
                col_name = self.expect_name().text
                self.expect(":")
                col_type = self.expect_name().text
                columns.append(Column(col_name, col_type))
                if self.accept(")"):
                    break
                self.expect(",")
        return RelationDecl(name, tuple(columns), location)

    def parse_type(self, program: Program):
        name_token = self.expect_name()
        if self.accept("<:"):
            base = self.expect_name().text
            if base not in PRIMITIVE_TYPES:
                raise DatalogSyntaxError(f"subtype of unknown primitive {base!r}", name_token.location)
            program.types[name_token.text] = RecordType(name_token.text, (Column("", base),))
            return
        self.expect("=")
        self.expect("[")
        fields: List[Column] = []
        if not self.accept("]"):
            while True:
                field_name = self.expect_name().text
                self.expect(":")
                fields.append(Column(field_name, self.expect_name().text))
                if self.accept("]"):
                    break
                self.expect(",")
        program.types[name_token.text] = RecordType(name_token.text, tuple(fields))

    # rules

    def parse_rule(self) -> Rule:
        start = self.current.location
        heads = [self.parse_atom(negated=False)]
        while self.accept(","):
            heads.append(self.parse_atom(negated=False))
        body: List[Literal] = []
        if self.accept(":-"):
            body.append(self.parse_literal())
            while self.accept(","):
                body.append(self.parse_literal())
        self.expect(".")
        return Rule(tuple(heads), tuple(body), start)

    def parse_literal(self) -> Literal:
        token = self.current
        if token.kind == "OP" and token.text == "!" and self.peek().kind == "NAME":
            self.advance()
            return self.parse_atom(negated=True)
        if token.kind == "NAME" and self.peek().kind == "OP" and self.peek().text == "(":
            return self.parse_atom(negated=False)
        left = self.parse_term()
        op_token = self.current
        if op_token.kind != "OP" or op_token.text not in _COMPARISONS:
            raise DatalogSyntaxError(f"expected a comparison, found {op_token.text!r}",
                                     op_token.location)
        self.advance()
        right = self.parse_term()
        return Comparison(_COMPARISONS[op_token.text], left, right, token.location)

    def parse_atom(self, negated: bool) -> Atom:
        name = self.expect_name()
        self.expect("(")
        terms: List[Term] = []
        if not self.accept(")"):
            terms.append(self.parse_term())
            while self.accept(","):
                terms.append(self.parse_term())
            self.expect(")")
        return Atom(name.text, tuple(terms), negated, name.location)

    def parse_term(self) -> Term:
        term = self.parse_product()
        while self.current.kind == "OP" and self.current.text in ("+", "-"):
            op = self.advance().text
            term = Arithmetic(op, term, self.parse_product())
        return term

    def parse_product(self) -> Term:
        term = self.parse_primary()
        while self.current.kind == "OP" and self.current.text in ("*", "/", "%"):
            op = self.advance().text
            term = Arithmetic(op, term, self.parse_primary())
        return term

    def parse_primary(self) -> Term:
        token = self.current
        if token.kind == "NUMBER":
            self.advance()
            value = int(token.text)
            if value >= 1 << 64:
                raise DatalogSyntaxError(f"number {value} exceeds 64 bits", token.location)
            return NumberConst(value)
        if token.kind == "STRING":
            self.advance()
            return SymbolConst(_unescape(token.text[1:-1]))
        if token.kind == "NAME":
            self.advance()
            if token.text == "nil":
                return NilConst()
            if token.text == "_":
                return Wildcard()
            if "." in token.text or "{" in token.text:
                raise DatalogSyntaxError(f"invalid variable name {token.text!r}", token.location)
            return Var(token.text)
        if self.accept("["):
            fields: List[Term] = []
            if not self.accept("]"):
                fields.append(self.parse_term())
                while self.accept(","):
                    fields.append(self.parse_term())
                self.expect("]")
            return RecordTerm(tuple(fields)) if fields else NilConst()
        if self.accept("@"):
            name = self.expect_name().text
            self.expect("(")
            args: List[Term] = []
            if not self.accept(")"):
                args.append(self.parse_term())
                while self.accept(","):
                    args.append(self.parse_term())
                self.expect(")")
            return FunctorCall(name, tuple(args))
        if self.accept("("):
            term = self.parse_term()
            self.expect(")")
            return term
        raise DatalogSyntaxError(f"unexpected token {token.text or 'end of input'!r}", token.location)


class _DeclSink:
    """Adapter so top-level and component declarations share one code path."""

    def __init__(self, program: Program):
        self.program = program

    def append(self, decl: RelationDecl):
        if decl.name in self.program.relations:
            raise DatalogSyntaxError(f"relation {decl.name} declared twice", decl.location)
        self.program.relations[decl.name] = decl


def _unescape(text: str) -> str:
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), text)


# --- component expansion ---------------------------------------------------

def _instance_name(component: str, index: int) -> str:
    return f"{component}_{index}"


def _rename_relation(name: str, local: Set[str], component: str, index: int) -> Optional[str]:
    """Resolve a relation name inside instance `index`; None if it refers to instance 0."""
    if name in local:
        return f"{_instance_name(component, index)}.{name}"

    dropped = False

    def substitute(match: re.Match) -> str:
        nonlocal dropped
        value = index - 1 if match.group(1) else index
        if value < 1:
            dropped = True
        return str(value)

    renamed = _PLACEHOLDER_RE.sub(substitute, name)
    return None if dropped else renamed


def _instantiate(program: Program, template: ComponentTemplate, count: int):
    local = {decl.name for decl in template.declarations}
    for index in range(1, count + 1):
        prefix = _instance_name(template.name, index)
        for decl in template.declarations:
            qualified = f"{prefix}.{decl.name}"
            if qualified in program.relations:
                raise DatalogSyntaxError(f"relation {qualified} declared twice", decl.location)
            program.relations[qualified] = replace(decl, name=qualified)
        for directive, target in ((template.inputs, program.inputs), (template.outputs, program.outputs)):
            for name in directive:
                renamed = _rename_relation(name, local, template.name, index)
                if renamed is not None and renamed not in target:
                    target.append(renamed)
        for rule in template.rules:
            renamed_rule = _rename_rule(rule, local, template.name, index)
            if renamed_rule is not None:
                program.rules.append(renamed_rule)
        logger.debug(f"Instantiated component {template.name} as {prefix}")


def _rename_rule(rule: Rule, local: Set[str], component: str, index: int) -> Optional[Rule]:
    def rename_atom(atom: Atom) -> Optional[Atom]:
        name = _rename_relation(atom.relation, local, component, index)
        return None if name is None else replace(atom, relation=name)

    heads = [rename_atom(head) for head in rule.heads]
    body: List[Literal] = []
    for literal in rule.body:
        if isinstance(literal, Atom):
            renamed = rename_atom(literal)
            if renamed is None:
                return None
            body.append(renamed)
        else:
            body.append(literal)
    if any(head is None for head in heads):
        return None
    return Rule(tuple(heads), tuple(body), rule.location)


# --- checks ----------------------------------------------------------------

def bound_variables(rule: Rule) -> Set[str]:
    """
    Variables bound by the body: positive atom patterns, plus equalities whose
    other side is computable from already bound variables.
    """
    bound: Set[str] = set()
    changed = True
    while changed:
        changed = False
        for literal in rule.body:
            if isinstance(literal, Atom):
                if literal.negated:
                    continue
                computed = [t for t in literal.terms if not is_pattern(t)]
                if all(set(term_variables(t)) <= bound for t in computed):
                    new = literal.variables() - bound
                    for t in computed:
                        new -= set(term_variables(t))
                    if new:
                        bound |= new
                        changed = True
            elif literal.op is ComparisonOp.EQ:
                for target, source in ((literal.left, literal.right), (literal.right, literal.left)):
                    if is_pattern(target) and set(term_variables(source)) <= bound:
                        new = set(term_variables(target)) - bound
                        if new:
                            bound |= new
                            changed = True
    return bound


def check_rule(rule: Rule, program: Program):
    """Validate arity, declaration and safety of one rule."""
    for atom in list(rule.heads) + [lit for lit in rule.body if isinstance(lit, Atom)]:
        decl = program.relations.get(atom.relation)
        if decl is None:
            raise UnknownPredicate(f"relation {atom.relation} is not declared", atom.location)
        if decl.arity != len(atom.terms):
            raise ArityError(f"{atom.relation} has arity {decl.arity}, used with {len(atom.terms)}",
                             atom.location)
    bound = bound_variables(rule)
    for literal in rule.body:
        if isinstance(literal, Atom) and literal.negated:
            if any(True for term in literal.terms for _ in term_functors(term)):
                raise SafetyError(f"functor call inside negated literal {literal}", literal.location)
            unbound = literal.variables() - bound
            if unbound:
                raise SafetyError(f"variables {sorted(unbound)} of negated literal {literal} "
                                  f"are not bound by a positive literal", literal.location)
        elif isinstance(literal, Comparison):
            unbound = literal.variables() - bound
            if unbound:
                raise SafetyError(f"variables {sorted(unbound)} of constraint {literal} are unbound",
                                  literal.location)
        elif any(isinstance(sub, Wildcard)
                 for term in literal.terms if not is_pattern(term) for sub in _walk(term)):
            raise SafetyError(f"wildcard inside a computed term in {literal}", literal.location)
    for head in rule.heads:
        for term in head.terms:
            if any(isinstance(sub, Wildcard) for sub in _walk(term)):
                raise SafetyError(f"wildcard in rule head {head}", head.location)
        unbound = head.variables() - bound
        if unbound:
            raise SafetyError(f"head variables {sorted(unbound)} of {head} are not range restricted",
                              head.location)


def _walk(term: Term):
    yield term
    if isinstance(term, RecordTerm):
        for sub in term.fields:
            yield from _walk(sub)
    elif isinstance(term, FunctorCall):
        for sub in term.args:
            yield from _walk(sub)
    elif isinstance(term, Arithmetic):
        yield from _walk(term.left)
        yield from _walk(term.right)


def _check_types(program: Program):
    known = set(PRIMITIVE_TYPES) | set(program.types)
    for decl in program.relations.values():
        for column in decl.columns:
            if column.type_name not in known:
                raise DatalogSyntaxError(f"unknown type {column.type_name} in {decl.name}",
                                         decl.location)
    for name in program.inputs + program.outputs:
        if name not in program.relations:
            raise UnknownPredicate(f"directive names undeclared relation {name}")


def parse_program(source_text: str) -> Program:
    """
    Parse and check a Datalog program.

    Args:
        source_text: program text in the Symflow dialect

    Returns:
        The Program with all component instances expanded

    Raises:
        DatalogSyntaxError, ArityError, UnknownPredicate, SafetyError
    """
    program = Program()
    parser = _Parser(tokenize(source_text))
    parser.parse_items(program, template=None)

    for name, count in program.instances:
        template = program.components.get(name)
        if template is None:
            raise DatalogSyntaxError(f".init refers to unknown component {name}")
        if count < 0:
            raise DatalogSyntaxError(f"negative instantiation count for {name}")
        _instantiate(program, template, count)

    _check_types(program)
    for rule in program.rules:
        check_rule(rule, program)

    logger.debug(f"Parsed program: {len(program.relations)} relations, {len(program.rules)} rules, "
                 f"{len(program.instances)} component instantiations")
    return program
