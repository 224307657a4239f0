"""Well-formedness checks. Violations are returned as data, never raised."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..core import Schema
from .syntax import (
    Atom,
    Const,
    Dependency,
    Eq,
    Func,
    IsConst,
    MappingSpec,
    Neq,
    Query,
    Rel,
    SOtgd,
    Var,
    atom_terms,
    atoms_vars,
    relational_vars,
    subterms,
    term_vars,
)


@dataclass(frozen=True)
class Violation:
    rule: str
    location: str
    message: str
    symbol: Optional[str] = None

    def __str__(self) -> str:
        return f"{self.location}: [{self.rule}] {self.message}"


def _relational(atoms, schema: Schema, where: str, out: list[Violation]) -> None:
    for atom in atoms:
        if not isinstance(atom, Rel):
            continue
        if atom.name not in schema:
            out.append(Violation("schema", where, f"relation {atom.name} is not in schema {schema.name}", atom.name))
        elif schema.arity(atom.name) != len(atom.args):
            out.append(
                Violation(
                    "arity",
                    where,
                    f"{atom.name} has arity {schema.arity(atom.name)}, used with {len(atom.args)}",
                    atom.name,
                )
            )


def _no_functions(atoms, where: str, out: list[Violation]) -> None:
    for atom in atoms:
        for t in atom_terms(atom):
            if any(isinstance(s, Func) for s in subterms(t)):
                out.append(Violation("first-order", where, "function terms need an SO-tgd body", None))
                return


def _range_restricted(atoms, bound: set[str]) -> set[str]:
    """Variables made safe by relational atoms, ``bound`` ones, and equality chains."""
    safe = set(bound) | relational_vars(atoms)
    changed = True
    while changed:
        changed = False
        for a in atoms:
            if isinstance(a, Eq):
                sides = [a.left, a.right]
                for x, y in (sides, sides[::-1]):
                    if isinstance(x, Var) and x.name not in safe:
                        if isinstance(y, Const) or (isinstance(y, Var) and y.name in safe):
                            safe.add(x.name)
                            changed = True
    return safe


def query_violations(q: Query, schema: Schema, where: str = "query", bound: frozenset = frozenset()) -> list[Violation]:
    out: list[Violation] = []
    for i, d in enumerate(q.disjuncts):
        loc = f"{where}, disjunct {i + 1}"
        _relational(d.atoms, schema, loc, out)
        _no_functions(d.atoms, loc, out)
        vs = atoms_vars(d.atoms)
        for v in q.free:
            if v not in vs:
                out.append(Violation("free-variable", loc, f"free variable {v} does not occur", v))
        safe = _range_restricted(d.atoms, set(bound))
        for v in vs:
            if v not in safe:
                out.append(Violation("safety", loc, f"variable {v} is not range-restricted", v))
    return out


def dependency_violations(
    d: Dependency, left: Schema, right: Schema, where: str, direction: str = "st"
) -> list[Violation]:
    out: list[Violation] = []
    _relational(d.premise, left, where + " premise", out)
    _no_functions(d.premise, where + " premise", out)
    if d.direction != direction:
        out.append(Violation("direction", where, f"dependency direction {d.direction} in a {direction} mapping"))
    for atom in d.premise:
        if isinstance(atom, Eq):
            out.append(Violation("language", where + " premise", "equalities are only allowed in conclusions", "="))
        if isinstance(atom, (Neq, IsConst)) and d.direction != "ts":
            sym = "!=" if isinstance(atom, Neq) else "C"
            out.append(Violation("language", where + " premise", f"{sym} is only allowed in ts-dependency premises", sym))
    pvars = relational_vars(d.premise)
    for v in atoms_vars(d.premise):
        if v not in pvars:
            out.append(Violation("safety", where + " premise", f"variable {v} does not occur in a relational atom", v))
    for dj in d.conclusion.disjuncts:
        for atom in dj.atoms:
            if isinstance(atom, (Neq, IsConst)):
                out.append(Violation("language", where + " conclusion", "conclusions allow relational and = atoms only"))
    for v in d.conclusion.free:
        if v not in atoms_vars(d.premise):
            out.append(Violation("frontier", where, f"free variable {v} of the conclusion is not in the premise", v))
    out.extend(query_violations(d.conclusion, right, where + " conclusion", frozenset(d.conclusion.free)))
    return out


def sotgd_violations(sigma: SOtgd, source: Schema, target: Schema, plain: bool = False) -> list[Violation]:
    out: list[Violation] = []
    declared = dict(sigma.functions)
    for i, clause in enumerate(sigma.clauses):
        where = f"clause {i + 1}"
        _relational(clause.premise, source, where + " premise", out)
        _relational(clause.conclusion, target, where + " conclusion", out)
        for atom in clause.premise:
            if isinstance(atom, Rel):
                for t in atom.args:
                    if isinstance(t, Func):
                        out.append(
                            Violation("condition 2", where, f"relational premise atom {atom.name} has a function term", atom.name)
                        )
            elif not isinstance(atom, Eq):
                out.append(Violation("condition 2", where, "premises contain relational and equality atoms only"))
        for atom in clause.conclusion:
            if not isinstance(atom, Rel):
                out.append(Violation("condition 3", where, "conclusions contain relational atoms only"))
        rel_vars = relational_vars(a for a in clause.premise if isinstance(a, Rel))
        for v in atoms_vars(clause.premise + clause.conclusion):
            if v not in rel_vars:
                out.append(
                    Violation("condition 4", where, f"variable {v} does not appear in a relational premise atom", v)
                )
        for atom in clause.premise + clause.conclusion:
            for t in atom_terms(atom):
                for s in subterms(t):
                    if isinstance(s, Func):
                        if s.name not in declared:
                            out.append(Violation("condition 1", where, f"undeclared function {s.name}", s.name))
                        elif declared[s.name] != len(s.args):
                            out.append(
                                Violation("arity", where, f"function {s.name} declared /{declared[s.name]}", s.name)
                            )
                        if plain and any(isinstance(a, Func) for a in s.args):
                            out.append(Violation("plain: no nesting", where, f"nested term in {s.name}", s.name))
            if plain and isinstance(atom, Eq):
                out.append(Violation("plain: no equality", where, "equality atom in a plain SO-tgd", "="))
    return out


def validate(spec: MappingSpec, plain: bool = False) -> list[Violation]:
    """Return every violated rule; an empty list means the mapping is well-formed.

    ``plain=True`` additionally enforces the plain SO-tgd restrictions.
    """
    out: list[Violation] = []
    if not spec.source.disjoint(spec.target):
        shared = sorted(set(spec.source.names) & set(spec.target.names))
        out.append(Violation("schemas", "mapping", f"schemas share relations {shared}", shared[0]))
    if spec.is_sotgd:
        out.extend(sotgd_violations(spec.body, spec.source, spec.target, plain))
    else:
        for i, d in enumerate(spec.body):
            out.extend(dependency_violations(d, spec.source, spec.target, f"dependency {i + 1}", spec.direction))
    return out


def is_plain(sigma: SOtgd) -> bool:
    return sigma.is_plain


def check_language(spec: MappingSpec, premise: set[str], conclusion: set[str], union: bool) -> list[Violation]:
    """Check that every dependency lies in the fragment <CQ^premise, (U)CQ^conclusion>."""
    out = []
    if spec.is_sotgd:
        return [Violation("language", "mapping", "body is an SO-tgd, not a set of dependencies")]
    for i, d in enumerate(spec.body):
        from .syntax import features

        pf = features(d.premise)
        if not pf <= premise:
            out.append(Violation("language", f"dependency {i + 1}", f"premise uses {sorted(pf - premise)}"))
        cf = d.conclusion.feature_tag
        if not cf <= conclusion:
            out.append(Violation("language", f"dependency {i + 1}", f"conclusion uses {sorted(cf - conclusion)}"))
        if not union and not d.conclusion.is_cq:
            out.append(Violation("language", f"dependency {i + 1}", "conclusion is a union"))
    return out
