"""Finite instance pools: every instance over a fixed set of values."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

from ..core import Fact, Instance, Schema, SchemaMismatch, Value, const, null

Facts = frozenset  # frozenset[Fact]


def pool_constants(k: int) -> tuple[Value, ...]:
    return tuple(const(i + 1) for i in range(k))


def pool_nulls(k: int) -> tuple[Value, ...]:
    return tuple(null(f"p{i + 1}") for i in range(k))


@dataclass(frozen=True)
class InstancePool:
    """All instances of ``schema`` over ``constants`` and ``null_budget`` nulls.

    Members are enumerated by bitmask over the sorted fact universe, so the
    order is deterministic and member ``k`` has fact set ``bits(k)``.
    """

    schema: Schema
    constants: tuple[Value, ...]
    null_budget: int = 0

    @classmethod
    def make(cls, schema: Schema, constants: int, nulls: int = 0, extra: Iterable[Value] = ()) -> "InstancePool":
        cs = sorted(set(pool_constants(constants)) | {v for v in extra if v.is_constant})
        return cls(schema, tuple(cs), nulls)

    @property
    def is_ground(self) -> bool:
        return self.null_budget == 0

    @cached_property
    def values(self) -> tuple[Value, ...]:
        return self.constants + pool_nulls(self.null_budget)

    @cached_property
    def facts(self) -> tuple[Fact, ...]:
        out = []
        for rel, arity in sorted(self.schema.relations):
            for args in itertools.product(self.values, repeat=arity):
                out.append(Fact(rel, args))
        return tuple(sorted(out))

    @cached_property
    def bit(self) -> dict[Fact, int]:
        return {f: 1 << i for i, f in enumerate(self.facts)}

    def __len__(self) -> int:
        return 1 << len(self.facts)

    def mask(self, facts: Iterable[Fact]) -> int:
        m = 0
        for f in facts:
            m |= self.bit[f]
        return m

    def facts_of(self, mask: int) -> Facts:
        return frozenset(f for i, f in enumerate(self.facts) if mask >> i & 1)

    def members(self) -> Iterator[Facts]:
        for m in range(len(self)):
            yield self.facts_of(m)

    def holds(self, facts: Iterable[Fact]) -> bool:
        vals = set(self.values)
        return all(f.rel in self.schema and all(v in vals for v in f.args) for f in facts)

    def instance(self, facts: Iterable[Fact]) -> Instance:
        return Instance(self.schema, frozenset(facts))

    def check(self, schema: Schema) -> None:
        if not self.schema.same_relations(schema):
            raise SchemaMismatch(f"pool over {self.schema.name} does not match schema {schema.name}")


@dataclass(frozen=True)
class Pools:
    source: InstancePool
    target: InstancePool

    @classmethod
    def for_mapping(
        cls, spec, constants: int = 2, nulls: int = 2, source_nulls: int = 0, others: Iterable = ()
    ) -> "Pools":
        """Pools over the mapping's schemas; constants of ``spec`` and ``others`` are added."""
        extra = set(spec.constants())
        for o in others:
            extra |= o.constants()
        return cls(
            InstancePool.make(spec.source, constants, source_nulls, extra),
            InstancePool.make(spec.target, constants, nulls, extra),
        )
