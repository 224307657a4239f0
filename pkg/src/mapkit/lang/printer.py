"""Canonical text rendering. ``parse(print(x)) == x`` for every printable value."""
from __future__ import annotations

import json
import re
from typing import Iterable

from ..core import Instance, Schema, Value
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
)

_NUMERAL = re.compile(r"-?[0-9]+(?:\.[0-9]+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        label = t.value.label
        return label if _NUMERAL.fullmatch(label) else json.dumps(label)
    return f"{t.name}({', '.join(print_term(a) for a in t.args)})"


def print_atom(a: Atom) -> str:
    if isinstance(a, Rel):
        return f"{a.name}({', '.join(print_term(t) for t in a.args)})"
    if isinstance(a, Eq):
        return f"{print_term(a.left)} = {print_term(a.right)}"
    if isinstance(a, Neq):
        return f"{print_term(a.left)} != {print_term(a.right)}"
    return f"C({print_term(a.term)})"


def print_conjunction(atoms: Iterable[Atom]) -> str:
    return " & ".join(print_atom(a) for a in atoms)


def print_disjunct(d: Disjunct) -> str:
    body = print_conjunction(d.atoms)
    if d.exists:
        return f"exists {', '.join(d.exists)} . {body}"
    return body


def print_union(q: Query) -> str:
    if not q.disjuncts:
        return "false"
    return " | ".join(print_disjunct(d) for d in q.disjuncts)


def print_dependency(d: Dependency) -> str:
    return f"{print_conjunction(d.premise)} -> {print_union(d.conclusion)}"


def print_clause(c: SOClause) -> str:
    return f"{print_conjunction(c.premise)} -> {print_conjunction(c.conclusion)}"


def print_schema(s: Schema) -> str:
    rels = " ".join(f"{r}/{n}," for r, n in s.relations)
    return f"schema {s.name} {{ {rels} }}" if rels else f"schema {s.name} {{ }}"


def print_mapping(spec: MappingSpec) -> str:
    lines = [print_schema(spec.source), print_schema(spec.target)]
    if spec.is_sotgd:
        fns = ", ".join(f"{f}/{n}" for f, n in spec.body.functions)
        lines.append(f"functions {fns}")
        deps = [print_clause(c) for c in spec.body.clauses]
    else:
        deps = [print_dependency(d) for d in spec.body]
    opts = []
    if spec.direction == "ts":
        opts.append("ts")
    if spec.semantics != "standard":
        opts.append(f"semantics={spec.semantics}")
    header = f"map {spec.name} : {spec.source.name} -> {spec.target.name}"
    if opts:
        header += f" [{', '.join(opts)}]"
    lines.append(header + " {")
    lines.extend(f"  {d};" for d in deps)
    lines.append("}")
    return "\n".join(lines) + "\n"


def print_value(v: Value) -> str:
    if v.is_null:
        return f"?{v.label}"
    if _IDENT.fullmatch(v.label) or _NUMERAL.fullmatch(v.label):
        return v.label
    return json.dumps(v.label)


def print_instance(inst: Instance, name: str = "I") -> str:
    lines = [f"instance {name} over {inst.schema.name} {{"]
    for f in inst:
        lines.append(f"  {f.rel}({', '.join(print_value(v) for v in f.args)}).")
    lines.append("}")
    return "\n".join(lines) + "\n"


def print_query(q: Query, name: str = "q") -> str:
    return f"query {name}({', '.join(q.free)}): {print_union(q)};\n"


def print_sotgd(sigma: SOtgd) -> str:
    """One-line rendering, used in reports."""
    fns = ", ".join(f"{f}/{n}" for f, n in sigma.functions)
    return f"exists {fns} . " + " ; ".join(f"({print_clause(c)})" for c in sigma.clauses)
