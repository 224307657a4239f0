"""Abstract syntax for queries, dependencies, SO-tgds and mapping specifications."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from ..core import Schema, Value


@dataclass(frozen=True, order=True)
class Var:
    name: str


@dataclass(frozen=True, order=True)
class Const:
    value: Value


@dataclass(frozen=True, order=True)
class Func:
    name: str
    args: tuple["Term", ...]


Term = Union[Var, Const, Func]


@dataclass(frozen=True, order=True)
class Rel:
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True, order=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True, order=True)
class Neq:
    left: Term
    right: Term


@dataclass(frozen=True, order=True)
class IsConst:
    term: Term


Atom = Union[Rel, Eq, Neq, IsConst]


def atom_terms(atom: Atom) -> tuple[Term, ...]:
    if isinstance(atom, Rel):
        return atom.args
    if isinstance(atom, IsConst):
        return (atom.term,)
    return (atom.left, atom.right)


def term_vars(term: Term) -> Iterator[str]:
    if isinstance(term, Var):
        yield term.name
    elif isinstance(term, Func):
        for a in term.args:
            yield from term_vars(a)


def atoms_vars(atoms: Iterable[Atom]) -> list[str]:
    """Variables of ``atoms`` in order of first occurrence."""
    seen: dict[str, None] = {}
    for atom in atoms:
        for t in atom_terms(atom):
            for v in term_vars(t):
                seen.setdefault(v, None)
    return list(seen)


def relational_vars(atoms: Iterable[Atom]) -> set[str]:
    return {v for a in atoms if isinstance(a, Rel) for t in a.args for v in term_vars(t)}


def term_depth(term: Term) -> int:
    if isinstance(term, Func):
        return 1 + max((term_depth(a) for a in term.args), default=0)
    return 0


def subterms(term: Term) -> Iterator[Term]:
    yield term
    if isinstance(term, Func):
        for a in term.args:
            yield from subterms(a)


def features(atoms: Iterable[Atom]) -> frozenset[str]:
    out = set()
    for a in atoms:
        if isinstance(a, Eq):
            out.add("=")
        elif isinstance(a, Neq):
            out.add("!=")
        elif isinstance(a, IsConst):
            out.add("C")
    return frozenset(out)


@dataclass(frozen=True)
class Disjunct:
    exists: tuple[str, ...]
    atoms: tuple[Atom, ...]


@dataclass(frozen=True)
class Query:
    """A union of conjunctive queries; ``free`` fixes the answer column order.

    An empty tuple of disjuncts is the unsatisfiable query.
    """

    free: tuple[str, ...]
    disjuncts: tuple[Disjunct, ...]

    @classmethod
    def cq(cls, free: Iterable[str], atoms: Iterable[Atom]) -> "Query":
        atoms = tuple(atoms)
        free = tuple(free)
        exists = tuple(v for v in atoms_vars(atoms) if v not in free)
        return cls(free, (Disjunct(exists, atoms),))

    @property
    def feature_tag(self) -> frozenset[str]:
        return frozenset().union(*(features(d.atoms) for d in self.disjuncts))

    @property
    def is_cq(self) -> bool:
        return len(self.disjuncts) == 1

    def relations(self) -> set[str]:
        return {a.name for d in self.disjuncts for a in d.atoms if isinstance(a, Rel)}


def language_name(base: str, feats: frozenset[str]) -> str:
    order = [f for f in ("=", "!=", "C") if f in feats]
    return base + ("^" + ",".join(order) if order else "")


@dataclass(frozen=True)
class Dependency:
    """``premise -> conclusion`` with implicit universal quantification.

    ``direction`` is ``"st"`` when the premise is over the source of the original
    mapping and ``"ts"`` for dependencies of a reverse (target-to-source) mapping.
    """

    premise: tuple[Atom, ...]
    conclusion: Query
    direction: str = "st"

    @property
    def frontier(self) -> tuple[str, ...]:
        return self.conclusion.free

    @property
    def class_tag(self) -> tuple[str, str]:
        left = language_name("CQ", features(self.premise))
        right = language_name("CQ" if self.conclusion.is_cq else "UCQ", self.conclusion.feature_tag)
        return left, right

    @property
    def is_st_tgd(self) -> bool:
        return self.direction == "st" and self.class_tag == ("CQ", "CQ")

    @property
    def existentials(self) -> tuple[str, ...]:
        if not self.conclusion.is_cq:
            return ()
        return self.conclusion.disjuncts[0].exists

    @classmethod
    def tgd(cls, premise: Iterable[Atom], conclusion: Iterable[Atom], direction: str = "st") -> "Dependency":
        premise = tuple(premise)
        conclusion = tuple(conclusion)
        pvars = set(atoms_vars(premise))
        free = tuple(v for v in atoms_vars(conclusion) if v in pvars)
        return cls(premise, Query.cq(free, conclusion), direction)


@dataclass(frozen=True)
class SOClause:
    premise: tuple[Atom, ...]
    conclusion: tuple[Rel, ...]

    @property
    def universals(self) -> list[str]:
        return atoms_vars(self.premise)


@dataclass(frozen=True)
class SOtgd:
    functions: tuple[tuple[str, int], ...]
    clauses: tuple[SOClause, ...]

    @property
    def is_plain(self) -> bool:
        for clause in self.clauses:
            for atom in clause.premise + clause.conclusion:
                if isinstance(atom, Eq):
                    return False
                for t in atom_terms(atom):
                    if isinstance(t, Func) and any(isinstance(a, Func) for a in t.args):
                        return False
        return True

    def arity(self, fname: str) -> int:
        return dict(self.functions)[fname]

    @property
    def max_depth(self) -> int:
        return max(
            (term_depth(t) for c in self.clauses for a in c.premise + c.conclusion for t in atom_terms(a)),
            default=0,
        )


SEMANTICS = ("standard", "universal", "extended")


@dataclass(frozen=True)
class MappingSpec:
    source: Schema
    target: Schema
    body: Union[tuple[Dependency, ...], SOtgd]
    semantics: str = "standard"
    name: str = "M"
    direction: str = "st"

    @property
    def is_sotgd(self) -> bool:
        return isinstance(self.body, SOtgd)

    @property
    def is_st_tgds(self) -> bool:
        return not self.is_sotgd and all(d.is_st_tgd for d in self.body) and self.direction == "st"

    def with_semantics(self, semantics: str) -> "MappingSpec":
        return MappingSpec(self.source, self.target, self.body, semantics, self.name, self.direction)

    def constants(self) -> set[Value]:
        out = set()
        atoms: list[Atom] = []
        if self.is_sotgd:
            for c in self.body.clauses:
                atoms.extend(c.premise + c.conclusion)
        else:
            for d in self.body:
                atoms.extend(d.premise)
                for dj in d.conclusion.disjuncts:
                    atoms.extend(dj.atoms)
        for a in atoms:
            for t in atom_terms(a):
                for s in subterms(t):
                    if isinstance(s, Const):
                        out.add(s.value)
        return out
