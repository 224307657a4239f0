"""Values, schemas, instances and homomorphisms.

Everything here is immutable. Instances are frozensets of facts, so they can be
used as dictionary keys and collected into sets by the oracle.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional


class MapkitError(Exception):
    """Base class for every error raised by the package."""


class SemanticError(MapkitError):
    """A well-formed input that violates a semantic rule (unknown relation, arity, ...)."""

    def __init__(self, message: str, symbol: Optional[str] = None):
        super().__init__(message)
        self.symbol = symbol


class SchemaMismatch(SemanticError):
    pass


class Value(NamedTuple):
    """A constant or a labeled null.

    Constants sort before nulls; within a kind values sort by label.
    """

    is_null: bool
    label: str

    @property
    def is_constant(self) -> bool:
        return not self.is_null

    def __repr__(self) -> str:
        return f"?{self.label}" if self.is_null else self.label


def const(label) -> Value:
    return Value(False, str(label))


def null(label) -> Value:
    return Value(True, str(label))


@dataclass(frozen=True)
class Schema:
    name: str
    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        seen = set()
        for rel, arity in self.relations:
            if rel in seen:
                raise SemanticError(f"duplicate relation {rel} in schema {self.name}", rel)
            if arity < 1:
                raise SemanticError(f"relation {rel} must have positive arity", rel)
            seen.add(rel)

    @classmethod
    def of(cls, name: str, **arities: int) -> "Schema":
        return cls(name, tuple(arities.items()))

    def arity(self, rel: str) -> int:
        for name, arity in self.relations:
            if name == rel:
                return arity
        raise SemanticError(f"unknown relation {rel} in schema {self.name}", rel)

    def __contains__(self, rel: str) -> bool:
        return any(name == rel for name, _ in self.relations)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def same_relations(self, other: "Schema") -> bool:
        return sorted(self.relations) == sorted(other.relations)

    def disjoint(self, other: "Schema") -> bool:
        return not set(self.names) & set(other.names)


class Fact(NamedTuple):
    rel: str
    args: tuple[Value, ...]

    def __repr__(self) -> str:
        return f"{self.rel}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Instance:
    schema: Schema
    facts: frozenset[Fact] = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.facts, frozenset):
            object.__setattr__(self, "facts", frozenset(self.facts))
        for fact in self.facts:
            if len(fact.args) != self.schema.arity(fact.rel):
                raise SemanticError(
                    f"fact {fact!r} does not match arity {self.schema.arity(fact.rel)}", fact.rel
                )

    @classmethod
    def build(cls, schema: Schema, *facts: tuple) -> "Instance":
        """Convenience constructor: ``Instance.build(s, ("S", 1, 2), ("T", "?n"))``.

        Strings starting with ``?`` become nulls, everything else constants.
        """
        out = []
        for rel, *args in facts:
            out.append(Fact(rel, tuple(_coerce(a) for a in args)))
        return cls(schema, frozenset(out))

    @property
    def is_ground(self) -> bool:
        return all(not v.is_null for f in self.facts for v in f.args)

    def relation(self, rel: str) -> frozenset[tuple[Value, ...]]:
        return frozenset(f.args for f in self.facts if f.rel == rel)

    def index(self) -> dict[str, list[tuple[Value, ...]]]:
        idx: dict[str, list[tuple[Value, ...]]] = defaultdict(list)
        for f in sorted(self.facts):
            idx[f.rel].append(f.args)
        return idx

    def nulls(self) -> frozenset[Value]:
        return frozenset(v for v in active_domain(self) if v.is_null)

    def with_facts(self, facts: Iterable[Fact]) -> "Instance":
        return Instance(self.schema, frozenset(facts))

    def rename(self, mapping: Mapping[Value, Value]) -> "Instance":
        return Instance(
            self.schema,
            frozenset(Fact(f.rel, tuple(mapping.get(v, v) for v in f.args)) for f in self.facts),
        )

    def __le__(self, other: "Instance") -> bool:
        return self.facts <= other.facts

    def __len__(self) -> int:
        return len(self.facts)

    def __iter__(self) -> Iterator[Fact]:
        return iter(sorted(self.facts))

    def __repr__(self) -> str:
        return "{" + ", ".join(repr(f) for f in sorted(self.facts)) + "}"


def _coerce(x) -> Value:
    if isinstance(x, Value):
        return x
    s = str(x)
    return null(s[1:]) if s.startswith("?") else const(s)


def active_domain(instance: Instance) -> frozenset[Value]:
    return frozenset(v for f in instance.facts for v in f.args)


def _check_same_schema(a: Instance, b: Instance) -> None:
    if not a.schema.same_relations(b.schema):
        raise SchemaMismatch(f"schema {a.schema.name} does not match {b.schema.name}")


def find_homomorphism(src: Instance, dst: Instance) -> Optional[dict[Value, Value]]:
    """Return a constant-preserving homomorphism ``src -> dst``, or None.

    Backtracking over facts of ``src``; at each step the fact with the fewest
    compatible images in ``dst`` is extended first.
    """
    _check_same_schema(src, dst)
    by_rel = dst.index()
    pending = sorted(src.facts)
    ident = {v: v for v in active_domain(src) if not v.is_null}

    def candidates(fact: Fact, h: dict) -> list[tuple[Value, ...]]:
        out = []
        for target in by_rel.get(fact.rel, ()):
            local = {}
            ok = True
            for v, w in zip(fact.args, target):
                if not v.is_null:
                    if v != w:
                        ok = False
                        break
                    continue
                bound = h.get(v, local.get(v))
                if bound is None:
                    local[v] = w
                elif bound != w:
                    ok = False
                    break
            if ok:
                out.append(target)
        return out

    def search(remaining: list[Fact], h: dict) -> Optional[dict]:
        if not remaining:
            return h
        scored = [(len(c), i, c) for i, f in enumerate(remaining) for c in [candidates(f, h)]]
        _, pos, options = min(scored, key=lambda t: (t[0], t[1]))
        if not options:
            return None
        fact = remaining[pos]
        rest = remaining[:pos] + remaining[pos + 1:]
        for target in options:
            ext = dict(h)
            for v, w in zip(fact.args, target):
                if v.is_null:
                    ext[v] = w
            found = search(rest, ext)
            if found is not None:
                return found
        return None

    result = search(pending, {})
    if result is None:
        return None
    result.update(ident)
    return result


def is_homomorphism(mapping: Mapping[Value, Value], src: Instance, dst: Instance) -> bool:
    for v, w in mapping.items():
        if not v.is_null and v != w:
            return False
    for f in src.facts:
        image = Fact(f.rel, tuple(mapping.get(v, v) for v in f.args))
        if any(v.is_null and v not in mapping for v in f.args):
            return False
        if image not in dst.facts:
            return False
    return True


def hom_equivalent(a: Instance, b: Instance) -> bool:
    return find_homomorphism(a, b) is not None and find_homomorphism(b, a) is not None
