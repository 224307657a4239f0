"""Recursive-descent parser for mapping, instance and query files.

Grammar (whitespace-insensitive, ``#`` starts a comment)::

    file       := schemaDecl schemaDecl functions? mapDecl
    schemaDecl := "schema" NAME "{" (REL "/" ARITY ",")* "}"
    functions  := "functions" (FN "/" ARITY ("," FN "/" ARITY)*)? ";"?
    mapDecl    := "map" NAME ":" NAME "->" NAME options? "{" (dep ";")* "}"
    options    := "[" opt ("," opt)* "]"          opt := "ts" | "semantics" "=" NAME
    dep        := conj "->" (disjunct ("|" disjunct)* | "false")
    disjunct   := ("exists" varlist ".")? conj
    conj       := atom ("&" atom)*
    atom       := REL "(" termlist ")" | "C" "(" term ")" | term "=" term | term "!=" term

    instance   := "instance" NAME "over" NAME "{" (REL "(" valuelist ")" ".")* "}"
    query      := "query" NAME "(" varlist? ")" ":" (disjunct ("|" disjunct)* | "false") ";"?
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from ..core import Fact, Instance, MapkitError, Schema, SemanticError, Value, const, null
from .syntax import (
    Atom,
    Const,
    Dependency,
    Disjunct,
    Eq,
    Func,
    IsConst,
    MappingSpec,
    Neq,
    Query,
    Rel,
    SOClause,
    SOtgd,
    Term,
    Var,
    atoms_vars,
)


class ParseError(MapkitError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<arrow>->)
  | (?P<neq>!=)
  | (?P<null>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>-?[0-9]+(?:\.[0-9]+)?)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[{}()\[\],;:.&|=/])
    """,
    re.VERBOSE,
)

KEYWORDS = {"schema", "map", "functions", "exists", "instance", "over", "query", "false"}


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.functions: dict[str, int] = {}

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("sym", "ident", "arrow", "neq")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {shown!r}")
        tok = self.tok
        self.pos += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def name(self, what: str = "name") -> str:
        if self.tok.kind != "ident":
            self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        text = self.tok.text
        self.pos += 1
        return text

    def integer(self) -> int:
        if self.tok.kind != "number" or not self.tok.text.isdigit():
            self.error("expected a positive integer")
        value = int(self.tok.text)
        self.pos += 1
        return value

    def finish(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r} after end of declaration")

    # -- declarations
    def schema_decl(self) -> Schema:
        self.expect("schema")
        name = self.name("schema name")
        self.expect("{")
        rels = []
        while not self.at("}"):
            tok = self.tok
            rel = self.name("relation name")
            if rel == "C":
                self.error("relation name C is reserved for the constant predicate", tok)
            self.expect("/")
            arity_tok = self.tok
            arity = self.integer()
            if arity < 1:
                self.error("arity must be positive", arity_tok)
            if rel in (r for r, _ in rels):
                self.error(f"duplicate relation {rel}", tok)
            rels.append((rel, arity))
            if not self.accept(","):
                break
        self.expect("}")
        return Schema(name, tuple(rels))

    def functions_decl(self) -> None:
        self.expect("functions")
        while self.tok.kind == "ident" and self.tok.text not in KEYWORDS:
            fname = self.name("function name")
            self.expect("/")
            self.functions[fname] = self.integer()
            if not self.accept(","):
                break
        self.accept(";")

    def mapping(self) -> MappingSpec:
        first = self.schema_decl()
        second = self.schema_decl()
        schemas = {first.name: first, second.name: second}
        sotgd = self.at("functions")
        if sotgd:
            self.functions_decl()
        self.expect("map")
        mname = self.name("mapping name")
        self.expect(":")
        src_tok = self.tok
        src_name = self.name("schema name")
        self.expect("->")
        tgt_tok = self.tok
        tgt_name = self.name("schema name")
        for tok, nm in ((src_tok, src_name), (tgt_tok, tgt_name)):
            if nm not in schemas:
                raise SemanticError(f"{tok.line}:{tok.col}: unknown schema {nm}", nm)
        source, target = schemas[src_name], schemas[tgt_name]
        if source.name == target.name:
            raise SemanticError("source and target schema must differ", src_name)
        direction, semantics = "st", "standard"
        if self.accept("["):
            while True:
                opt = self.name("option")
                if opt == "ts":
                    direction = "ts"
                elif opt == "semantics":
                    self.expect("=")
                    sem_tok = self.tok
                    semantics = self.name("semantics")
                    if semantics not in ("standard", "universal", "extended"):
                        self.error(f"unknown semantics {semantics}", sem_tok)
                else:
                    self.error(f"unknown option {opt}")
                if not self.accept(","):
                    break
            self.expect("]")
        self.expect("{")
        deps = []
        while not self.at("}"):
            deps.append(self.dependency(sotgd))
            self.expect(";")
        self.expect("}")
        self.finish()
        if sotgd:
            body: Union[tuple, SOtgd] = SOtgd(tuple(self.functions.items()), tuple(deps))
        else:
            body = tuple(
                Dependency(p, q, direction) for p, q in deps
            )
        spec = MappingSpec(source, target, body, semantics, mname, direction)
        from .validate import validate

        problems = validate(spec)
        if problems:
            first_problem = problems[0]
            raise SemanticError(str(first_problem), first_problem.symbol)
        return spec

    def dependency(self, sotgd: bool):
        start = self.tok
        premise = self.conjunction()
        self.expect("->")
        if sotgd:
            if self.at("exists"):
                self.error("SO-tgd clauses cannot use exists; use function terms")
            conclusion = self.conjunction()
            for atom in conclusion:
                if not isinstance(atom, Rel):
                    self.error("SO-tgd conclusions contain relational atoms only", start)
            return SOClause(tuple(premise), tuple(conclusion))
        pvars = set(atoms_vars(premise))
        disjuncts = self.disjunction()
        return tuple(premise), _close_query(disjuncts, pvars)

    def disjunction(self) -> list[tuple[tuple[str, ...], list[Atom], Token]]:
        if self.accept("false"):
            return []
        out = [self.disjunct()]
        while self.accept("|"):
            out.append(self.disjunct())
        return out

    def disjunct(self):
        tok = self.tok
        exists: list[str] = []
        if self.accept("exists"):
            exists.append(self.variable_name())
            while self.accept(","):
                exists.append(self.variable_name())
            self.expect(".")
        return tuple(exists), self.conjunction(), tok

    def variable_name(self) -> str:
        tok = self.tok
        name = self.name("variable")
        if not (name[0].islower() or name[0] == "_") or name in KEYWORDS:
            self.error(f"{name!r} is not a variable (variables are lowercase)", tok)
        return name

    def conjunction(self) -> list[Atom]:
        atoms = [self.atom()]
        while self.accept("&"):
            atoms.append(self.atom())
        return atoms

    def atom(self) -> Atom:
        tok = self.tok
        if tok.kind == "ident" and tok.text == "C" and self.peek().text == "(":
            self.pos += 2
            term = self.term()
            self.expect(")")
            return IsConst(term)
        if tok.kind == "ident" and self.peek().text == "(" and tok.text not in self.functions:
            self.pos += 2
            args = self.term_list()
            self.expect(")")
            if self.at("=") or self.at("!="):
                self.error(f"{tok.text} is not a declared function", tok)
            return Rel(tok.text, tuple(args))
        left = self.term()
        if self.accept("="):
            return Eq(left, self.term())
        if self.accept("!="):
            return Neq(left, self.term())
        self.error("expected an atom")

    def term_list(self) -> list[Term]:
        if self.at(")"):
            self.error("relations and functions need at least one argument")
        out = [self.term()]
        while self.accept(","):
            out.append(self.term())
        if not self.at(")") and self.tok.kind != "eof":
            self.error(f"expected ',' or ')', found {self.tok.text!r}")
        return out

    def term(self) -> Term:
        tok = self.tok
        if tok.kind == "number":
            self.pos += 1
            return Const(const(tok.text))
        if tok.kind == "string":
            self.pos += 1
            return Const(const(json.loads(tok.text)))
        if tok.kind == "ident":
            if self.peek().text == "(":
                if tok.text not in self.functions:
                    self.error(f"unknown function {tok.text}", tok)
                self.pos += 2
                args = self.term_list()
                self.expect(")")
                return Func(tok.text, tuple(args))
            return Var(self.variable_name())
        self.error(f"expected a term, found {tok.text or 'end of input'!r}")

    # -- instances and queries
    def instance(self, schemas: Mapping[str, Schema]) -> Instance:
        self.expect("instance")
        self.name("instance name")
        self.expect("over")
        stok = self.tok
        sname = self.name("schema name")
        if sname not in schemas:
            raise SemanticError(f"{stok.line}:{stok.col}: unknown schema {sname}", sname)
        schema = schemas[sname]
        self.expect("{")
        facts = []
        while not self.at("}"):
            rtok = self.tok
            rel = self.name("relation name")
            self.expect("(")
            values = [self.value()]
            while self.accept(","):
                values.append(self.value())
            self.expect(")")
            self.expect(".")
            if rel not in schema:
                raise SemanticError(f"{rtok.line}:{rtok.col}: unknown relation {rel}", rel)
            if schema.arity(rel) != len(values):
                raise SemanticError(
                    f"{rtok.line}:{rtok.col}: {rel} expects {schema.arity(rel)} values, got {len(values)}",
                    rel,
                )
            facts.append(Fact(rel, tuple(values)))
        self.expect("}")
        self.finish()
        return Instance(schema, frozenset(facts))

    def value(self) -> Value:
        tok = self.tok
        self.pos += 1
        if tok.kind == "null":
            return null(tok.text[1:])
        if tok.kind == "number" or tok.kind == "ident":
            return const(tok.text)
        if tok.kind == "string":
            return const(json.loads(tok.text))
        self.error(f"expected a value, found {tok.text or 'end of input'!r}", tok)

    def query(self) -> Query:
        self.expect("query")
        self.name("query name")
        self.expect("(")
        free: list[str] = []
        if not self.at(")"):
            free.append(self.variable_name())
            while self.accept(","):
                free.append(self.variable_name())
        self.expect(")")
        self.expect(":")
        disjuncts = self.disjunction()
        self.accept(";")
        self.finish()
        return _close_query(disjuncts, set(free), tuple(free))


def _close_query(disjuncts, bound: set[str], free: Optional[tuple[str, ...]] = None) -> Query:
    """Assemble a Query; free variables default to the bound ones that occur.

    With an explicit ``free`` list (query files) unlisted variables are
    implicitly existential; in dependency conclusions they must be declared.
    """
    implicit = free is not None
    if free is None:
        seen: dict[str, None] = {}
        for _, atoms, _ in disjuncts:
            for v in atoms_vars(atoms):
                if v in bound:
                    seen.setdefault(v, None)
        free = tuple(seen)
    out = []
    for exists, atoms, tok in disjuncts:
        for v in exists:
            if v in bound:
                raise SemanticError(f"{tok.line}:{tok.col}: existential {v} is already bound", v)
        if implicit:
            exists = tuple(exists) + tuple(v for v in atoms_vars(atoms) if v not in bound and v not in exists)
        for v in atoms_vars(atoms):
            if v not in bound and v not in exists:
                raise SemanticError(f"{tok.line}:{tok.col}: unsafe variable {v}", v)
        out.append(Disjunct(tuple(exists), tuple(atoms)))
    return Query(free, tuple(out))


def parse_mapping(text: str) -> MappingSpec:
    return _Parser(text).mapping()


def parse_instance(text: str, schemas: Union[Schema, Iterable[Schema], Mapping[str, Schema]]) -> Instance:
    if isinstance(schemas, Schema):
        schemas = {schemas.name: schemas}
    elif not isinstance(schemas, Mapping):
        schemas = {s.name: s for s in schemas}
    return _Parser(text).instance(schemas)


def parse_query(text: str, schema: Optional[Schema] = None) -> Query:
    q = _Parser(text).query()
    if schema is not None:
        from .validate import query_violations

        problems = query_violations(q, schema)
        if problems:
            raise SemanticError(str(problems[0]), problems[0].symbol)
    return q
